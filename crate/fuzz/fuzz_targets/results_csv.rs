#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = fanav_cli::results::parse_results(text) {
            let _ = fanav_cli::results::report_table(&rows);
        }
    }
});
