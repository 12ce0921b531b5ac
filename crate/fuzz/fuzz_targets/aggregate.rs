#![no_main]
use idla::io::{parse_aggregate, write_aggregate};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(agg) = parse_aggregate(text) {
        let out = write_aggregate(&agg);
        let again = parse_aggregate(&out).expect("written aggregate parses");
        assert_eq!(write_aggregate(&again), out);
    }
});
