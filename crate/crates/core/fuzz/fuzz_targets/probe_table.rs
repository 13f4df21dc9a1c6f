#![no_main]

use cablemap::ingest::ProbeTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ProbeTable::from_json(text);
    }
});
