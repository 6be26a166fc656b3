#![no_main]

use libfuzzer_sys::fuzz_target;
use massqcrb::statespec::{custom_state_json, parse_custom_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = parse_custom_json(text) {
            let back = parse_custom_json(&custom_state_json(&s)).expect("own output parses");
            assert_eq!(back.coeffs(), s.coeffs());
        }
    }
});
