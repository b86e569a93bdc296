#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(snap) = fanav::simworld::parse_snapshot(text) {
            let _ = fanav_cli::ppm::to_ppm(&fanav_cli::ppm::render_snapshot(&snap));
        }
    }
});
