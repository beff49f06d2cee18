#![no_main]

use libfuzzer_sys::fuzz_target;
use ssglm::io::{parse_matrix, parse_vector};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = parse_matrix(text) {
            assert!(m.nrows() > 0 && m.ncols() > 0);
            assert!(m.iter().all(|v| v.is_finite()));
        }
        if let Ok(v) = parse_vector(text) {
            assert!(!v.is_empty());
        }
    }
});
