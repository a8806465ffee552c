use std::process::{Command, Output};

use serde_json::Value;

fn nast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nast")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("nast-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn breaks_mixed_values() {
    let path = tmp("breaks.json");
    let out = nast(&["breaks", "--p", "3", "--M", "1", "--eK", "2", "--json", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let closed: Vec<&str> = v["mixed_breaks"].as_array().unwrap().iter().map(|b| b["closed"].as_str().unwrap()).collect();
    assert_eq!(closed, ["3", "11/3"]);
    assert_eq!(v["checks"]["two_path"], true);
    assert_eq!(v["char_p_breaks"][1]["search"]["value"], "5");
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(file, v);
}

#[test]
fn breaks_precondition() {
    let out = nast(&["breaks", "--p", "3", "--M", "1", "--eK", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("precondition"));
}

#[test]
fn output_is_deterministic() {
    let args = ["verify", "--suite", "bch", "--p", "3", "--M", "2", "--seed", "9"];
    let a = nast(&args);
    let b = nast(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_suites() {
    let out = nast(&["verify", "--suite", "thm44"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["report"]["notes"][0], "grid size 186");
    assert_eq!(nast(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(nast(&["verify"]).status.code(), Some(2));
    assert_eq!(nast(&["verify", "--suite", "lemma34", "--M", "2"]).status.code(), Some(2));
}

#[test]
fn pairing() {
    let out = nast(&["pair", "--table", "--p", "3", "--M", "2", "--N0", "2", "--amax", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["identity"], true);
    // sigma(t^-1) - t^-1 is a coboundary
    let f = r#"{"low":-3,"prec":4,"coeffs":{"-3":[1],"-1":[8]}}"#;
    let g = r#"{"a0":1,"exponents":{"1":[2],"2":[5]}}"#;
    let out = nast(&["pair", "--p", "3", "--M", "2", "--f", f, "--g", g]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["value"], "0");
    let out = nast(&["pair", "--p", "3", "--M", "2", "--f", r#"{"low":0,"prec":1,"coeffs":{"0":[1]}}"#, "--g", r#"{"a0":1}"#]);
    assert_eq!(json(&out)["value"], "1");
    let bad = nast(&["pair", "--p", "3", "--f", f, "--g", r#"{"a0":"x"}"#]);
    assert_eq!(bad.status.code(), Some(2));
    let bad = nast(&["pair", "--p", "3", "--f", f, "--g", r#"{"a0":1,"exponents":{"3":[1]}}"#]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn lift() {
    let out = nast(&["lift", "--identity", "--p", "3", "--class", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["solution"]["residual_zero"], true);
    assert!(v["solution"]["c"].as_object().unwrap().is_empty());
    let out = nast(&["lift", "--p", "3", "--class", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["solution"]["residual_zero"], true);
    assert_eq!(nast(&["lift", "--p", "3", "--class", "3"]).status.code(), Some(2));
}

#[test]
fn config_file_and_flags() {
    let path = tmp("config.json");
    std::fs::write(&path, r#"{"p": 5, "M": 1, "eK": 8, "suite": "thm44"}"#).unwrap();
    let out = nast(&["breaks", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["params"]["p"], 5);
    let out = nast(&["breaks", "--config", path.to_str().unwrap(), "--p", "3", "--eK", "2"]);
    assert_eq!(json(&out)["params"]["p"], 3);
    assert_eq!(nast(&["verify", "--config", path.to_str().unwrap()]).status.code(), Some(0));
    std::fs::write(&path, r#"{"q": 5}"#).unwrap();
    assert_eq!(nast(&["breaks", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(nast(&["breaks", "--p", "4"]).status.code(), Some(2));
    assert_eq!(nast(&["frobnicate"]).status.code(), Some(2));
}
