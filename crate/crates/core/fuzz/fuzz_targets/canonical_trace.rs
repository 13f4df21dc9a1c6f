#![no_main]

use cablemap::ingest::{extract_links, parse_canonical_line, read_traces, TraceFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(trace) = parse_canonical_line(text) {
            for link in extract_links(&trace) {
                assert_ne!(link.a(), link.b());
            }
        }
    }
    if let Ok(parsed) = read_traces(data, TraceFormat::CanonicalJsonl, None) {
        assert!(parsed.records.len() as u64 <= parsed.stats.seen());
    }
});
