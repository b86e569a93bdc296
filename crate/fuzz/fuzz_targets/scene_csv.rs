#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(scene) = fanav::gsscene::parse_csv(text) {
            let again = fanav::gsscene::parse_csv(&fanav::gsscene::to_csv_string(&scene)).expect("re-parse");
            assert_eq!(again.gaussians, scene.gaussians);
        }
    }
});
