use std::path::Path;
use std::process::Command;

use vmt::cli::run_with;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(std::iter::once("vmt").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn suite(dir: &Path) -> (String, String) {
    let gt = dir.join("gt.json");
    let coarse = dir.join("coarse.json");
    assert_eq!(run(&["synth", "--out", p(&gt), "--videos", "6", "--width", "64", "--height", "64"]).0, 0);
    assert_eq!(run(&["degrade", p(&gt), "--out", p(&coarse)]).0, 0);
    (p(&gt).to_string(), p(&coarse).to_string())
}

#[test]
fn evaluating_ground_truth_against_itself_gives_hundred() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, _) = suite(dir.path());
    let (code, out, _) = run(&["evaluate", &gt, &gt]);
    assert_eq!(code, 0);
    let header: Vec<&str> = out.lines().next().unwrap().split_whitespace().collect();
    let row: Vec<&str> = out.lines().nth(1).unwrap().split_whitespace().collect();
    assert_eq!(row[header.iter().position(|c| *c == "AP^B").unwrap()], "100.0");
    assert_eq!(row[header.iter().position(|c| *c == "AP^M").unwrap()], "100.0");
}

#[test]
fn missing_file_exits_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, _) = suite(dir.path());
    let missing = dir.path().join("missing.json");
    let (code, out, err) = run(&["evaluate", &gt, p(&missing)]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains(p(&missing)), "{err}");
}

#[test]
fn invalid_input_exits_one_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, _) = suite(dir.path());
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"videos": [{"id": "one"}], "annotations": [], "categories": []}"#).unwrap();
    let (code, _, err) = run(&["evaluate", &gt, p(&bad)]);
    assert_eq!(code, 1);
    assert!(err.contains("$.videos[0].id"), "{err}");
    assert!(err.contains("bad.json"), "{err}");
    assert_eq!(run(&["evaluate", &gt, &gt, "--thresholds", "0.9,0.5"]).0, 1);
    assert_eq!(run(&["correct", &gt, "--refiner", "nonsense", "--out", "x.json"]).0, 1);
    assert_eq!(run(&["evaluate", &gt, &gt, "--no-such-flag"]).0, 1);
}

#[test]
fn iterate_writes_a_non_decreasing_history() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, coarse) = suite(dir.path());
    let out_dir = dir.path().join("loop");
    let refiner = format!("oracle:{gt}");
    let (code, _, err) = run(&["iterate", &coarse, &gt, "--refiner", &refiner, "--max-iters", "4", "--out-dir", p(&out_dir)]);
    assert_eq!(code, 0, "{err}");
    let h: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("history.json")).unwrap()).unwrap();
    let ap: Vec<f64> = h["iterations"].as_array().unwrap().iter().map(|r| r["boundary_ap"].as_f64().unwrap()).collect();
    assert!(ap.len() <= 5, "iteration 0 plus at most 4 passes");
    assert!(ap.windows(2).all(|w| w[1] >= w[0]), "{ap:?}");
    for k in 1..ap.len() {
        assert!(out_dir.join(format!("iteration_{k}.json")).exists());
    }
}

#[test]
fn json_and_table_formats() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, coarse) = suite(dir.path());
    let (_, out, _) = run(&["evaluate", &gt, &coarse, "--format", "json", "--boundary-d", "3", "--band-mode", "inner-only"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["band_mode"], "inner-only");
    assert!(v["resolved_d"].as_array().unwrap().iter().all(|r| r["d"] == 3));
    let (_, out, _) = run(&["detect", &coarse, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["videos"], 6);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_vmt");
    let ok = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let missing = Command::new(bin).args(["detect", "/nonexistent/annotations.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/annotations.json"));
    let usage = Command::new(bin).args(["evaluate"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
}
