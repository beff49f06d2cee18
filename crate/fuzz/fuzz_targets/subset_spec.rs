#![no_main]

use libfuzzer_sys::fuzz_target;
use ssglm::io::parse_subset;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let labels: Vec<String> = ["X1", "X2", "age", "SAXrs1", "7"].iter().map(|s| s.to_string()).collect();
        if let Ok(s) = parse_subset(text, &labels) {
            assert!(!s.is_empty());
            assert!(s.iter().all(|&j| j < labels.len()));
        }
    }
});
