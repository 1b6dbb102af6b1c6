#![no_main]

use libfuzzer_sys::fuzz_target;
use thp_core::harness::{parse_rate_csv, rate_csv_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(records) = parse_rate_csv(text) {
        let again = parse_rate_csv(&rate_csv_string(&records)).expect("rendered table must parse");
        assert_eq!(again, records);
    }
});
