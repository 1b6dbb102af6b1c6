#![no_main]

use libfuzzer_sys::fuzz_target;
use thp_core::harness::{ConfigOverrides, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(o) = ConfigOverrides::parse(text) {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&o);
        let _ = cfg.validate();
    }
});
