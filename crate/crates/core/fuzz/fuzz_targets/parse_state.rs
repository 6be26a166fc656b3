#![no_main]

use libfuzzer_sys::fuzz_target;
use massqcrb::statespec::parse_state;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // File-backed specs are covered by the custom_state_json target.
    if !text.starts_with("custom:") {
        if let Ok(s) = parse_state(text) {
            let norm: f64 = s.probabilities().sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }
});
