#![no_main]

use libfuzzer_sys::fuzz_target;
use ssm_edge::PipelineConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = PipelineConfig::from_json(text) {
        let again = serde_json::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_json(&again).unwrap(), cfg);
    }
});
