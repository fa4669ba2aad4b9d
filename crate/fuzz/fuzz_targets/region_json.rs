#![no_main]

use libfuzzer_sys::fuzz_target;
use sdof_core::region::{region_from_json, region_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(region) = region_from_json(text) {
        for v in region.vertices() {
            assert!(region.contains(v));
        }
        let again = region_from_json(&region_to_json(&region)).expect("re-parse of emitted region");
        assert_eq!(again, region);
    }
});
