#![no_main]

use libfuzzer_sys::fuzz_target;
use ssglm::sim::SimScenario;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = SimScenario::from_toml(text) {
            let back = SimScenario::from_toml(&s.to_toml().unwrap()).unwrap();
            assert_eq!(back, s);
        }
    }
});
