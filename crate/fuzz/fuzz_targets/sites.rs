#![no_main]
use idla::io::parse_sites;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sites) = parse_sites(text) {
        let out = sites.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        assert_eq!(parse_sites(&out).expect("formatted sites parse"), sites);
    }
});
