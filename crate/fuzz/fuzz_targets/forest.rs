#![no_main]
use idla::io::{parse_forest, write_forest};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_forest(text) {
        assert!(f.validate().is_ok());
        let out = write_forest(&f);
        let again = parse_forest(&out).expect("written forest parses");
        assert_eq!(write_forest(&again), out);
    }
});
