#![no_main]

use libfuzzer_sys::fuzz_target;
use lorae_sim::experiments::parse_device_counts;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(counts) = parse_device_counts(text) {
            assert!(counts[0] > 0);
            assert!(counts.windows(2).all(|w| w[0] < w[1]));
        }
    }
});
