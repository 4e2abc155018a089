use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn hyperbond(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hyperbond"));
    cmd.args(args).env_remove("HYP_DEPTH_CAP");
    cmd
}

fn report(out: &Output) -> Value {
    let stdout = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(stdout.lines().count(), 1, "one report line expected: {stdout}");
    serde_json::from_str(&stdout).unwrap()
}

#[test]
fn generated_structures_validate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    let out =
        hyperbond(&["brunnian", "--branching", "3", "--order", "2", "--out", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["artifacts"][0], path.to_str().unwrap());

    let out = hyperbond(&["validate", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "validate");
    assert_eq!(r["ok"], true);
    assert!(!out.stderr.is_empty());
}

#[test]
fn findings_exit_one() {
    let out = hyperbond(&["validate", fixture("dangling.json").to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let findings = report(&out)["findings"].as_array().unwrap().clone();
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0]["kind"], "UnknownLeaf");
}

#[test]
fn usage_errors_exit_two() {
    let out = hyperbond(&["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("usage"));

    let out = hyperbond(&["validate", "/nonexistent/structure.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["ok"], false);

    let out = hyperbond(&["validate", fixture("malformed.json").to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(report(&out)["error"]["kind"].is_string());
}

#[test]
fn depth_cap_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("deep.json");
    let deep = r#"{"version":1,"objects":["a","b"],"levels":[{"index":0,"bonds":[{"id":"n","support":[["a",["b"]]],"state":"s"}]}]}"#;
    std::fs::write(&path, deep).unwrap();
    let deep = path.to_str().unwrap();
    assert_eq!(hyperbond(&["validate", deep]).output().unwrap().status.code(), Some(0));

    let out = hyperbond(&["validate", deep]).env("HYP_DEPTH_CAP", "2").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let kinds: Vec<Value> = report(&out)["findings"].as_array().unwrap().iter().map(|f| f["kind"].clone()).collect();
    assert!(kinds.contains(&Value::from("DepthCapExceeded")), "{kinds:?}");

    let out = hyperbond(&["validate", deep]).env("HYP_DEPTH_CAP", "deep").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fmt_is_a_fixpoint() {
    let out = hyperbond(&["fmt", fixture("unsorted.json").to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc = report(&out)["document"].clone();
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    std::fs::write(&first, doc.to_string()).unwrap();
    let again = hyperbond(&["fmt", first.to_str().unwrap()]).output().unwrap();
    assert_eq!(report(&again)["document"], doc);
}

#[test]
fn custom_table_combiner() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.json");
    std::fs::write(&table, r#"{"9,3":"z","3,9":"z"}"#).unwrap();
    let ring = fixture("ring9.json");
    let args = ["compose", ring.to_str().unwrap(), "--a", "top", "--b", "g1", "--level", "0", "--mode", "weak"];

    let mut with_table = args.to_vec();
    with_table.extend(["--combiner", "custom", "--table", table.to_str().unwrap()]);
    let out = hyperbond(&with_table).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["state"], "z");

    let mut missing = args.to_vec();
    missing.extend(["--combiner", "custom"]);
    assert_eq!(hyperbond(&missing).output().unwrap().status.code(), Some(2));
}
