#![no_main]

use libfuzzer_sys::fuzz_target;
use thp_core::harness::parse_bits_list;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(bits) = parse_bits_list(text) {
        assert!(!bits.is_empty());
    }
});
