use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const T1: &str = r#"{"n": 2, "partitions": [{"utilities": [["1", "0"], ["1", "0"]]}]}"#;
const T2: &str = r#"{"n": 2, "partitions": [{"utilities": [["2", "0"], ["0", "2"]]}]}"#;
const IDENTITY: &str = r#"{"p": ["1"], "q": [[["1", "0"], ["0", "1"]]]}"#;

fn efpo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efpo")).args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn solve_t2_with_hull() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "t2.json", T2);
    let lot = dir.path().join("lot.json");
    let out = efpo(&["solve", s(&inst), "--method", "hull", "-o", s(&lot)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["social_welfare"], "4");
    assert_eq!(v["method"], "hull");

    let check = efpo(&["verify", s(&inst), s(&lot), "--mode", "exact"]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn solve_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "t1.json", T1);
    let a = efpo(&["solve", s(&inst), "--method", "fixpoint"]);
    let b = efpo(&["solve", s(&inst), "--method", "fixpoint"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["social_welfare"], "1");
}

#[test]
fn verify_reports_envy() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "t1.json", T1);
    let lot = write(&dir, "id.json", IDENTITY);
    let lp = dir.path().join("pareto.lp");
    let out = efpo(&["verify", s(&inst), s(&lot), "--dump-lp", s(&lp)]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["ef"], false);
    assert_eq!(v["envy_pairs"][0]["envious"], 2);
    assert_eq!(v["envy_pairs"][0]["envied"], 1);
    assert_eq!(v["pareto"]["dominated"], false);
    assert_eq!(v["pareto"]["mode"], "exact");
    assert!(std::fs::read_to_string(&lp).unwrap().contains("t1"));
}

#[test]
fn structural_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "t1.json", T1);
    let bad = write(&dir, "bad.json", r#"{"p": ["1"], "q": [[["1", "1"], ["0", "0"]]]}"#);
    let out = efpo(&["verify", s(&inst), s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));

    let decimal = write(&dir, "dec.json", r#"{"n": 1, "partitions": [{"utilities": [["0.5"]]}]}"#);
    assert_eq!(efpo(&["rho", s(&decimal)]).status.code(), Some(2));
    assert_eq!(efpo(&["rho", "/nonexistent/file.json"]).status.code(), Some(2));
    assert_eq!(efpo(&["solve", s(&inst), "--method", "simplex"]).status.code(), Some(2));
    assert_eq!(efpo(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn welfare_threshold_decides_exit_code() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "t2.json", T2);
    let yes = efpo(&["welfare", s(&inst), "--threshold", "4"]);
    assert_eq!(yes.status.code(), Some(0));
    assert_eq!(stdout_json(&yes)["social_welfare"], "4");
    let no = efpo(&["welfare", s(&inst), "--threshold", "9/2"]);
    assert_eq!(no.status.code(), Some(1));
    assert_eq!(stdout_json(&no)["meets_threshold"], false);
}

#[test]
fn rho_of_t2() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "t2.json", T2);
    let out = efpo(&["rho", s(&inst)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["rho"], "1/2");
    assert_eq!(v["epsilon"], "1/8");
}

#[test]
fn x3c_generation_and_witness() {
    let dir = TempDir::new().unwrap();
    let phi = write(&dir, "phi.json", r#"{"r": 6, "triples": [[1, 2, 3], [4, 5, 6], [1, 4, 5]]}"#);
    let inst = dir.path().join("inst.json");
    let side = dir.path().join("side.json");
    let out = efpo(&["gen-x3c", s(&phi), "-o", s(&inst), "--sidecar", s(&side)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let v = stdout_json(&out);
    assert_eq!(v["n"], 3 + 1 + 18 + 18);
    assert_eq!(v["m"], 9);
    let sidecar: Value = serde_json::from_str(&std::fs::read_to_string(&side).unwrap()).unwrap();
    assert_eq!(sidecar["epsilon"], "1/108");
    assert_eq!(sidecar["partition_index"]["P_1_1"], 1);

    let lot = dir.path().join("lot.json");
    let ok = efpo(&["witness", s(&phi), "--cover", "1,2", "-o", s(&lot)]);
    assert_eq!(ok.status.code(), Some(0));
    let check = efpo(&["verify", s(&inst), s(&lot), "--mode", "exact"]);
    let report = stdout_json(&check);
    assert_eq!(report["ef"], true);
    assert_eq!(report["social_welfare"], sidecar["K"]);

    let bad = efpo(&["witness", s(&phi), "--cover", "1,3"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("element 1"));
}

#[test]
fn decompose_and_sample() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "t1.json", T1);
    let lot = write(&dir, "half.json", r#"{"p": ["1"], "q": [[["1/2", "1/2"], ["1/2", "1/2"]]]}"#);
    let dec = dir.path().join("dec.json");
    assert_eq!(efpo(&["decompose", s(&inst), s(&lot), "-o", s(&dec)]).status.code(), Some(0));
    let parsed: Value = serde_json::from_str(&std::fs::read_to_string(&dec).unwrap()).unwrap();
    assert_eq!(parsed["partitions"][0]["terms"][0]["perm"], serde_json::json!([1, 2]));
    assert_eq!(parsed["partitions"][0]["terms"][0]["alpha"], "1/2");

    let a = efpo(&["sample", s(&dec), "--seed", "42", "--count", "20"]);
    let b = efpo(&["sample", s(&dec), "--seed", "42", "--count", "20"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let lines: Vec<Value> = String::from_utf8(a.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 20);
    assert!(lines.iter().all(|l| l["partition"] == 1));
}
