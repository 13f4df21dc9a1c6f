#![no_main]

use cablemap::ingest::{extract_links, read_traces, ProbeTable, TraceFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let probes = ProbeTable::from_json(r#"{"1": {"lat": 52.0, "lon": 4.0}, "2": {"lat": -33.9, "lon": 151.2}}"#)
        .expect("seed probes");
    if let Ok(parsed) = read_traces(data, TraceFormat::AtlasJson, Some(&probes)) {
        for trace in &parsed.records {
            let _ = extract_links(trace);
        }
    }
});
