#![no_main]

//! One line of any per-record input file. The first byte picks the schema.

use cablemap::geoloc::{GeoObservation, GroundTruth};
use cablemap::ownermap::{AsRecord, AsnRecord};
use cablemap::pipeline::{FailureSpec, OperatorTruth};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&selector, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    match selector % 6 {
        0 => drop(serde_json::from_str::<GeoObservation>(text)),
        1 => drop(serde_json::from_str::<AsnRecord>(text)),
        2 => {
            if let Ok(r) = serde_json::from_str::<AsRecord>(text) {
                let back: AsRecord = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
                assert_eq!(back, r);
            }
        }
        3 => drop(serde_json::from_str::<GroundTruth>(text)),
        4 => drop(serde_json::from_str::<FailureSpec>(text)),
        _ => drop(serde_json::from_str::<Vec<OperatorTruth>>(text)),
    }
});
