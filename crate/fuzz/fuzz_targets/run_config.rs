#![no_main]

use libfuzzer_sys::fuzz_target;
use ssglm::io::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(c) = RunConfig::from_toml(text) {
            c.validate().unwrap();
        }
    }
});
