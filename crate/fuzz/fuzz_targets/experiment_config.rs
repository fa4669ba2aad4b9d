#![no_main]

use libfuzzer_sys::fuzz_target;
use sdof_core::experiment::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        let echoed = serde_json::to_string(&cfg).expect("config serializes");
        assert_eq!(ExperimentConfig::from_json(&echoed).expect("re-parse of echoed config"), cfg);
    }
});
