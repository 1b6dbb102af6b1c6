#![no_main]

use libfuzzer_sys::fuzz_target;
use thp_core::harness::parse_schemes;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = parse_schemes(text) {
        assert!(!s.is_empty() && s.len() <= 4);
    }
});
