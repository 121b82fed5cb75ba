use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sandpile(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sandpile")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn classify_reports_sandpile() {
    let out = sandpile(&["classify", "--poly", "-u^-1+5-2u-2u^-1+u^-1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["sandpile"], true);
    assert_eq!(v["gamma"], 5);
}

#[test]
fn malformed_input_exits_2() {
    let out = sandpile(&["classify", "--poly", "5-2*"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("position"));
    assert_eq!(sandpile(&["group", "--poly", "5-2u-2u^-1", "--window", "1..2"]).status.code(), Some(2));
}

#[test]
fn oversized_enumeration_exits_3() {
    let out = sandpile(&["group", "--poly", "5-2u-2u^-1", "--window", "box:d=1:1..40"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn group_of_two_sites_has_21_elements() {
    let out = sandpile(&["group", "--poly", "5-2u-2u^-1", "--window", "box:d=1:1..2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("21"), "{text}");
}

#[test]
fn spec_with_unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"command": "classify", "poly": "2-u", "colour": "blue"}"#).unwrap();
    let out = sandpile(&["run", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn spec_runs_like_the_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"command": "classify", "poly": "5-2u-2u^-1"}"#).unwrap();
    let a = sandpile(&["run", spec.to_str().unwrap()]);
    let b = sandpile(&["classify", "--poly", "5-2u-2u^-1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(json(&a), json(&b));
}

#[test]
fn cover_check_reports_equal_entropies() {
    let out = sandpile(&["cover-check", "--f", "-u^-1+2", "--g", "2-u", "--nmax", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let text = v.to_string();
    assert!(text.contains("0.693147"), "{text}");
}

#[test]
fn reproduce_artifacts_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, extra) in [(&a, None), (&b, Some("--sequential"))] {
        let mut args = vec!["reproduce", "--out-dir", dir.path().to_str().unwrap()];
        args.extend(extra);
        let out = sandpile(&args);
        assert_eq!(out.status.code(), Some(0), "{out:?}");
    }
    let (fa, fb) = (read_dir(a.path()), read_dir(b.path()));
    assert!(fa.contains_key("report.json") && fa.contains_key("entropy_table.csv"));
    assert_eq!(fa, fb);
}
