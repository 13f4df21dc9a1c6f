#![no_main]

use cablemap::model::PipelineConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = PipelineConfig::from_toml(text) {
        let back = PipelineConfig::from_toml(&cfg.to_toml()).expect("serialized config reparses");
        assert_eq!(back.digest(), cfg.digest());
    }
});
