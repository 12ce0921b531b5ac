use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn idla(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idla"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run idla")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = idla(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn grow_single_site() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["grow", "--variant", "det", "--n", "1", "--M", "0", "--seed", "1", "-o", "out.agg"]);
    let text = fs::read_to_string(dir.path().join("out.agg")).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("0 0 "));
}

#[test]
fn grow_counts_sites() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["grow", "--variant", "det", "--n", "3", "--M", "2", "--seed", "9", "-o", "out.agg"]);
    let text = fs::read_to_string(dir.path().join("out.agg")).unwrap();
    assert_eq!(data_rows(&text).len(), 15);
}

#[test]
fn single_particle_forest_has_one_root() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["forest", "--variant", "classical", "--n", "1", "-o", "f.txt"]);
    let text = fs::read_to_string(dir.path().join("f.txt")).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    let fields: Vec<&str> = rows[0].split(' ').collect();
    assert_eq!(&fields[..4], ["0", "0", "-", "-"]);
}

#[test]
fn classical_tree_svg_has_one_line_per_edge() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["forest", "--variant", "classical", "--n", "1500", "--seed", "3", "-o", "t.txt", "--svg", "t.svg"]);
    let svg = fs::read_to_string(dir.path().join("t.svg")).unwrap();
    assert_eq!(svg.matches("<line").count(), 1499);
    ok(dir.path(), &["render", "t.txt", "-o", "r.svg", "--rect", "10"]);
    let again = fs::read_to_string(dir.path().join("r.svg")).unwrap();
    assert_eq!(again.matches("<line").count(), 1499);
}

#[test]
fn forest_rejects_line_variants_without_clock() {
    let dir = tempfile::tempdir().unwrap();
    let out = idla(dir.path(), &["forest", "--variant", "det", "--n", "2", "--M", "2", "-o", "f.txt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diff_against_itself_and_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["forest", "--variant", "clock", "--n", "2", "--M", "20", "--seed", "4", "-o", "a.txt"]);
    let same = ok(dir.path(), &["diff", "a.txt", "a.txt"]);
    assert!(same.starts_with("0 discrepancies"), "{same}");

    let a = fs::read_to_string(dir.path().join("a.txt")).unwrap();
    let shifted: String = a
        .lines()
        .map(|l| {
            if l.starts_with('#') {
                return format!("{l}\n");
            }
            let mut f: Vec<String> = l.split(' ').map(String::from).collect();
            for i in [1, 3] {
                if f[i] != "-" {
                    f[i] = (f[i].parse::<i32>().unwrap() + 1000).to_string();
                }
            }
            format!("{}\n", f.join(" "))
        })
        .collect();
    fs::write(dir.path().join("b.txt"), shifted).unwrap();
    let vertices = data_rows(&a).len();
    let report = ok(dir.path(), &["diff", "a.txt", "b.txt", "-o", "d.csv"]);
    assert!(report.contains(&format!("({} vertex", 2 * vertices)), "{report}");
    let csv = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("vertex,")).count(), 2 * vertices);
}

#[test]
fn coupled_truncations_differ_in_strip() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["forest", "--variant", "clock", "--n", "3", "--M", "20", "--seed", "1", "-o", "small.txt"]);
    ok(dir.path(), &["forest", "--variant", "clock", "--n", "3", "--M", "50", "--seed", "1", "-o", "large.txt"]);
    let report = ok(dir.path(), &["diff", "small.txt", "large.txt", "--strip", "20", "-o", "d.csv"]);
    assert!(report.contains("discrepancies"));
    let csv = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("kind,x,y"));
}

#[test]
fn diff_parse_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("junk.txt"), "not a forest\n").unwrap();
    let out = idla(dir.path(), &["diff", "junk.txt", "junk.txt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiments_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let summary = ok(dir.path(), &["experiment", "abelian", "--particles", "3", "--orders", "all", "-o", "ab"]);
    assert!(summary.contains("max TV distance across orders: 0"), "{summary}");
    assert!(summary.contains("PASS"));
    assert!(dir.path().join("ab.csv").exists());
    assert!(dir.path().join("ab.summary.txt").exists());

    let exits = ok(dir.path(), &["experiment", "exit-counts", "--r", "0", "--rp", "6", "--tau", "(6,0)"]);
    assert!(!exits.contains("FAIL"), "{exits}");

    let width = ok(dir.path(), &["experiment", "width", "--variant", "det", "--n", "30", "--M", "200", "--seeds", "40"]);
    assert!(width.contains("row 0 within 5% of n") && !width.contains("FAIL"), "{width}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["experiment", "nonsense"],
        vec!["grow", "--variant", "weird", "-o", "x"],
        vec!["grow", "--n", "abc", "-o", "x"],
        vec!["experiment", "mixing", "--k-grid", "0,500"],
        vec!["frobnicate"],
    ] {
        let out = idla(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn step_budget_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = idla(dir.path(), &["grow", "--n", "40", "--M", "40", "--max-steps", "5", "-o", "x"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "variant = det\nn = 4\nM = 3\n").unwrap();
    ok(dir.path(), &["grow", "--config", "run.cfg", "-o", "a.agg"]);
    ok(dir.path(), &["grow", "--config", "run.cfg", "--n", "2", "-o", "b.agg"]);
    let rows = |f: &str| data_rows(&fs::read_to_string(dir.path().join(f)).unwrap()).len();
    assert_eq!(rows("a.agg"), 28);
    assert_eq!(rows("b.agg"), 14);

    fs::write(dir.path().join("bad.cfg"), "n = 1\nn = 2\n").unwrap();
    let out = idla(dir.path(), &["grow", "--config", "bad.cfg", "-o", "c.agg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn job_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let args = |jobs: &'static str, out: &'static str| {
        vec!["experiment", "height", "--n", "2", "--M", "6", "--t-max", "40", "--seeds", "12", "--jobs", jobs, "-o", out]
    };
    ok(dir.path(), &args("1", "one"));
    ok(dir.path(), &args("3", "three"));
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("one.csv"), read("three.csv"));
    assert_eq!(read("one.summary.txt"), read("three.summary.txt"));
}
