#![no_main]

use libfuzzer_sys::fuzz_target;
use lorae_sim::experiments::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            if let Some(counts) = cfg.device_counts {
                assert!(!counts.is_empty());
                assert!(counts.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
});
