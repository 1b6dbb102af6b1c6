#![no_main]

use libfuzzer_sys::fuzz_target;
use thp_core::harness::parse_snr_grid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = parse_snr_grid(text) {
        assert!(!grid.is_empty());
        assert!(grid.iter().all(|x| x.is_finite()));
    }
});
