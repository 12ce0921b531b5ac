use std::fs;
use std::path::PathBuf;

use idla::io::{parse_aggregate, parse_config, parse_forest, parse_sites, write_aggregate, write_forest};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn aggregate_seeds_round_trip() {
    for (name, text) in seeds("aggregate") {
        if name.starts_with("bad_") {
            assert!(parse_aggregate(&text).is_err(), "{name}");
            continue;
        }
        let agg = parse_aggregate(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(write_aggregate(&agg), text, "{name}");
    }
}

#[test]
fn forest_seeds_round_trip() {
    for (name, text) in seeds("forest") {
        if name.starts_with("bad_") {
            assert!(parse_forest(&text).is_err(), "{name}");
            continue;
        }
        let f = parse_forest(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        f.validate().unwrap();
        let again = parse_forest(&write_forest(&f)).unwrap();
        assert_eq!(write_forest(&again), write_forest(&f), "{name}");
    }
}

#[test]
fn config_seeds() {
    for (name, text) in seeds("config") {
        let parsed = parse_config(&text);
        assert_eq!(parsed.is_ok(), !name.starts_with("bad_"), "{name}");
    }
}

#[test]
fn site_seeds() {
    for (name, text) in seeds("sites") {
        let parsed = parse_sites(&text);
        assert_eq!(parsed.is_ok(), !name.starts_with("bad_"), "{name}");
    }
}
