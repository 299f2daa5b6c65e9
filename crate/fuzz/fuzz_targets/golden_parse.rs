#![no_main]

use libfuzzer_sys::fuzz_target;
use lorae_sim::hopping::golden;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(carriers) = golden::parse(text) {
            let again = golden::parse(&golden::render("fuzz", &carriers)).unwrap();
            assert_eq!(again, carriers);
        }
    }
});
