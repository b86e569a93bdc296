#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(records) = fanav::simworld::parse_trace(text) {
            let _ = fanav::simworld::trace_to_string(&records);
        }
    }
});
