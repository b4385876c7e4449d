#![no_main]

use libfuzzer_sys::fuzz_target;
use twophoton::cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_toml(text) {
        // A loaded config is fully resolved, so its echo must load back unchanged.
        let again = RunConfig::from_toml(&cfg.to_toml()).expect("echo reloads");
        assert_eq!(again, cfg);
    }
});
