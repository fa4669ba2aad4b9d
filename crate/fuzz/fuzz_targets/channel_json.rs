#![no_main]

use libfuzzer_sys::fuzz_target;
use sdof_core::channel::{channel_from_json, channel_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ch) = channel_from_json(text) {
        // Accepted channels must survive a round trip unchanged.
        let again = channel_from_json(&channel_to_json(&ch)).expect("re-parse of emitted channel");
        assert_eq!(again, ch);
    }
});
