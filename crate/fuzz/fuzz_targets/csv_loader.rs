#![no_main]

use libfuzzer_sys::fuzz_target;
use ssglm::io::{parse_dataset, LoadOptions};

fuzz_target!(|data: &[u8]| {
    let (delimiter, body) = match data.split_first() {
        Some((&b'\t', rest)) => (b'\t', rest),
        _ => (b',', data),
    };
    let opts = LoadOptions {
        delimiter,
        ..LoadOptions::default()
    };
    if let Ok(d) = parse_dataset(body, &opts) {
        assert_eq!(d.y.len(), d.x.nrows());
        assert_eq!(d.labels.len(), d.x.ncols());
    }
});
