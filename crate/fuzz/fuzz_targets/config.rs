#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = fanav_cli::config::Config::parse(text, "fuzz") {
            let dump = cfg.dump();
            let again = fanav_cli::config::Config::parse(&dump, "dump").expect("dump re-parses");
            assert_eq!(again.dump(), dump);
            let _ = cfg.sim_config();
        }
    }
});
