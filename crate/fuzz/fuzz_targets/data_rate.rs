#![no_main]

use libfuzzer_sys::fuzz_target;
use lorae_sim::params::{dr_profile, DrAlias, Region};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (region, dr) = text.split_once(' ').unwrap_or(("EU868", text));
    let (Ok(region), Ok(dr)) = (region.parse::<Region>(), dr.parse::<DrAlias>()) else { return };
    assert_eq!(dr.to_string().parse::<DrAlias>(), Ok(dr));
    if let Ok(p) = dr_profile(region, dr) {
        for payload in [1, p.max_payload_bytes] {
            assert!(p.time_on_air_ms(payload).unwrap() > 0);
        }
    }
});
