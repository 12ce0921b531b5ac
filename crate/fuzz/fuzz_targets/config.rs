#![no_main]
use idla::io::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(pairs) = parse_config(text) {
            for (k, v) in pairs {
                assert!(!k.is_empty() && !v.is_empty());
            }
        }
    }
});
