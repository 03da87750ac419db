#![no_main]

use eamac::io::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::from_toml_str(text) else { return };
    let _ = cfg.validate();
    let _ = cfg.flatten();
    if let Ok(again) = cfg.to_toml_string() {
        let back = RunConfig::from_toml_str(&again).expect("serialized config parses");
        assert_eq!(back.to_toml_string().ok(), Some(again));
    }
});
