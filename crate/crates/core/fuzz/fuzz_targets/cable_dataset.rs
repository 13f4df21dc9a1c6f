#![no_main]

use cablemap::geomap::LandingPointIndex;
use cablemap::model::{CableDataset, GeoPoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ds) = CableDataset::from_json(text) {
        let index = LandingPointIndex::new(&ds);
        let _ = index.nearest(GeoPoint::new(0.0, 0.0).unwrap());
        let again = CableDataset::from_raw(ds.to_raw()).expect("round trip");
        assert_eq!(again, ds);
    }
});
