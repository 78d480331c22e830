use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn expid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expid"))
        .args(args)
        .env_remove("EXPID_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const EXP_X: &str = r#"{"num_inputs":1,"output":1,"gates":[
  {"id":0,"kind":"input","var":0},
  {"id":1,"kind":"exp","children":[0]}]}"#;

const EXP_EXP: &str = r#"{"num_inputs":1,"output":2,"gates":[
  {"id":0,"kind":"input","var":0},
  {"id":1,"kind":"exp","children":[0]},
  {"id":2,"kind":"exp","children":[1]}]}"#;

// 2(x+1)^8 by repeated squaring: 9 terms, over a cap of 8
const POW8: &str = r#"{"num_inputs":1,"output":6,"gates":[
  {"id":0,"kind":"input","var":0},
  {"id":1,"kind":"const","value":"1"},
  {"id":2,"kind":"add","children":[0,1]},
  {"id":3,"kind":"mul","children":[2,2]},
  {"id":4,"kind":"mul","children":[3,3]},
  {"id":5,"kind":"mul","children":[4,4]},
  {"id":6,"kind":"add","children":[5,5]}]}"#;

#[test]
fn example_softmax_writes_one_valid_file_per_coordinate() {
    let dir = TempDir::new().unwrap();
    let out = expid(&["example", "softmax", "--n", "3", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0);
    for i in 1..=3 {
        let f = dir.path().join(format!("softmax_{i}.json"));
        let v = expid(&["validate", s(&f)]);
        assert_eq!(code(&v), 0, "{}", String::from_utf8_lossy(&v.stderr));
        let json: serde_json::Value = serde_json::from_slice(&v.stdout).unwrap();
        assert_eq!(json["num_inputs"], 3);
        assert_eq!(json["fraction"]["denominator"]["k"], 3);
    }
}

#[test]
fn nested_exp_is_invalid() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "c.json", EXP_EXP);
    let out = expid(&["validate", s(&f)]);
    assert_eq!(code(&out), 3);
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_json_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "c.json", "{\"num_inputs\": 1,");
    assert_eq!(code(&expid(&["validate", s(&f)])), 2);
    let unknown = write(
        dir.path(),
        "u.json",
        r#"{"num_inputs":1,"output":0,"gates":[{"id":0,"kind":"input","var":0,"extra":1}]}"#,
    );
    assert_eq!(code(&expid(&["validate", s(&unknown)])), 2);
    assert_eq!(code(&expid(&["validate", "/nonexistent/file.json"])), 2);
}

#[test]
fn softmax_sum_is_equivalent_to_one() {
    let dir = TempDir::new().unwrap();
    let d = s(dir.path());
    assert_eq!(code(&expid(&["example", "softmax-sum", "--n", "3", "--out", d])), 0);
    assert_eq!(code(&expid(&["example", "one", "--n", "3", "--out", d])), 0);
    let out = expid(&[
        "test-equiv",
        s(&dir.path().join("softmax_sum.json")),
        s(&dir.path().join("one.json")),
        "--delta",
        "1e-3",
    ]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["decision"], "accept_zero");
    assert!(json["witness"].is_null());
}

#[test]
fn exp_x_is_rejected_with_witness() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "c.json", EXP_X);
    let out = expid(&["test-zero", s(&f)]);
    assert_eq!(code(&out), 1);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["decision"], "reject_nonzero");
    let p = json["params"]["p"].as_u64().unwrap();
    let value = json["witness"]["value"].as_u64().unwrap();
    assert!(value != 0 && value < p);
}

#[test]
fn term_blowup_is_inconclusive_unless_bounds_given() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "c.json", POW8);
    let out = expid(&["test-zero", s(&f), "--term-cap", "8"]);
    assert_eq!(code(&out), 4);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["decision"], "inconclusive");
    let out = expid(&["test-zero", s(&f), "--term-cap", "8", "--bounds", "1,8,512"]);
    assert_eq!(code(&out), 1);
    assert_eq!(code(&expid(&["oracle", s(&f), "--term-cap", "8"])), 4);
    assert_eq!(code(&expid(&["oracle", s(&f)])), 1);
}

#[test]
fn verdict_is_byte_deterministic_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "c.json", EXP_X);
    let a = expid(&["test-zero", s(&f), "--seed", "7"]);
    let b = expid(&["test-zero", s(&f), "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_expid"))
        .args(["test-zero", s(&f)])
        .env("EXPID_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(a.stdout, c.stdout);
    let d = expid(&["test-zero", s(&f), "--seed", "8"]);
    assert_ne!(a.stdout, d.stdout);
}

#[test]
fn out_flag_writes_the_verdict_file() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "c.json", EXP_X);
    let target = dir.path().join("verdict.json");
    let out = expid(&["test-zero", s(&f), "--out", s(&target)]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(json["decision"], "reject_nonzero");
}

#[test]
fn gen_params_regime_example() {
    let out = expid(&["gen-params", "--k", "2", "--w", "1"]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["p"], 23);
    assert_eq!(json["q"], 11);
    let a = json["a"].as_u64().unwrap();
    assert_ne!(a, 1);
    assert_eq!((1..=11).fold(1u64, |acc, _| acc * a % 23), 1);
}

#[test]
fn descartes_scan_csv() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("scan.csv");
    let out = expid(&["descartes", "scan", "--k", "2", "--q", "11", "--out", s(&target)]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&target).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("k,p,q,instances,max_count"));
    assert!(rows[1].starts_with("2,23,11,220,1,"));
}

#[test]
fn descartes_crt_and_kelley() {
    let out = expid(&["descartes", "crt", "--p", "7", "--q", "3"]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["elements_checked"], 343);
    assert_eq!(json["injective"], true);

    let out = expid(&["descartes", "kelley", "--alphas", "3,5", "--modulus", "11", "--n", "11"]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["symmetric_residue"], 2);
}

#[test]
fn bad_flags_exit_with_parse_code() {
    assert_eq!(code(&expid(&["test-zero"])), 2);
    assert_eq!(code(&expid(&["test-zero", "x.json", "--bounds", "1,2"])), 2);
}
