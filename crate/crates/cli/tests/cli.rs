use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simplex-lab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn trees_four_leaves() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["trees", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("count 11"));
    assert!(out.contains("((1 2) (3 4))"));
    for f in ["trees.csv", "coverage.csv", "manifest.json"] {
        assert!(tmp.path().join("out/trees").join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/trees/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["n"], 4);
    assert_eq!(manifest["status"], "done");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn unknown_config_field_exits_2() {
    let tmp = TempDir::new().unwrap();
    std::fs::write(tmp.path().join("c.json"), r#"{"subcommand": "trees", "params": {"n": 4, "leaves": 3}}"#).unwrap();
    let o = run(tmp.path(), &["run", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field `leaves`"));
}

#[test]
fn mismatched_subcommand_exits_2() {
    let tmp = TempDir::new().unwrap();
    std::fs::write(tmp.path().join("c.json"), r#"{"subcommand": "chirp", "params": {}}"#).unwrap();
    assert_eq!(run(tmp.path(), &["trees", "--config", "c.json"]).status.code(), Some(2));
}

#[test]
fn flags_override_config() {
    let tmp = TempDir::new().unwrap();
    std::fs::write(tmp.path().join("c.json"), r#"{"subcommand": "trees", "params": {"n": 5}}"#).unwrap();
    let o = run(tmp.path(), &["trees", "--config", "c.json", "--n", "3"]);
    assert_eq!(stdout(&o).lines().next(), Some("count 3"));
    let o = run(tmp.path(), &["run", "--config", "c.json"]);
    assert_eq!(stdout(&o).lines().next(), Some("count 45"));
}

#[test]
fn enumeration_guard_exits_3() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(run(tmp.path(), &["trees", "--n", "9"]).status.code(), Some(3));
}

#[test]
fn chirp_csv_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("chirp.csv")).unwrap();
    run(tmp.path(), &["chirp", "--Nmax", "1024", "--out", "a"]);
    run(tmp.path(), &["chirp", "--Nmax", "1024", "--out", "b"]);
    assert_eq!(read("a"), read("b"));
    let csv = String::from_utf8(read("a")).unwrap();
    assert!(csv.starts_with("window,quasinorm_ratio_t3,quasinorm_ratio_t3tilde\r\n"));
    assert_eq!(csv.lines().count(), 1 + 7);
    assert!(tmp.path().join("a/chirp.svg").exists());
}

#[test]
fn chirp_check_reports_bounded_t3_failure() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["chirp", "--Nmax", "1024", "--check"]);
    assert!(stdout(&o).contains("T3 tilde: slope"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn partition_check_passes() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["partition", "--samples", "500", "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn negative_vector_flags_parse() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["apply", "--op", "simplex", "--arity", "2", "--signs", "1,-1", "--grid", "128"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(tmp.path(), &["apply", "--op", "simplex", "--arity", "3", "--signs", "1,-1", "--grid", "128"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selfcheck_single_criterion() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["selfcheck", "--only", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));
    assert!(tmp.path().join("out/selfcheck/selfcheck.json").exists());
}
