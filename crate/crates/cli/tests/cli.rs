use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paircorr"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Vec<u8> {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn r2_matches_committed_golden() {
    let golden = std::fs::read_to_string(data("sample_r2_golden.csv")).unwrap();
    let points = data("sample_points.bin");
    for method in ["fast", "naive"] {
        let csv = ok(&["r2", "--points", p(&points), "--s-grid", "0:3:1/10", "--method", method]);
        assert_eq!(String::from_utf8(csv).unwrap(), golden, "method {method}");
    }
}

#[test]
fn points_regenerate_byte_identical() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p.bin");
    ok(&[
        "points",
        "--seq",
        p(&data("sample_seq.json")),
        "--alpha",
        p(&data("sample_alpha.json")),
        "--out",
        p(&out),
    ]);
    assert_eq!(std::fs::read(out).unwrap(), std::fs::read(data("sample_points.bin")).unwrap());
}

#[test]
fn same_config_twice_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let seq = dir.path().join("seq.json");
    let alpha = dir.path().join("alpha.json");
    let pts = dir.path().join("p.bin");
    ok(&["gen", "--family", "sidon", "--n", "120", "--out", p(&seq)]);
    ok(&["alpha", "--random", "--seed", "5", "--bits", "96", "--out", p(&alpha)]);
    ok(&["points", "--seq", p(&seq), "--alpha", p(&alpha), "--out", p(&pts)]);
    let a = ok(&["r2", "--points", p(&pts)]);
    let b = ok(&["r2", "--points", p(&pts)]);
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 52);
}

#[test]
fn gen_writes_versioned_decimal_strings() {
    let v = json(&ok(&["gen", "--family", "lacunary", "--base", "3", "--n", "3"]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["family"], "lacunary");
    assert_eq!(v["values"], serde_json::json!(["3", "9", "27"]));
    let v = json(&ok(&["gen", "--family", "poly", "--coeffs", "1,0", "--n", "3"]));
    assert_eq!(v["values"], serde_json::json!(["1", "2", "3"]));
}

#[test]
fn non_increasing_polynomial_is_a_json_error() {
    let out = run(&["gen", "--family", "poly", "--coeffs", "1,-10,0", "--n", "4"]);
    assert_eq!(out.status.code(), Some(1));
    let err = json(&out.stderr);
    assert_eq!(err["error"], "computation");
}

#[test]
fn missing_flag_is_usage_error() {
    let out = run(&["gen", "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out.stderr)["error"], "usage");
    // randomized commands need a seed
    let out = run(&["alpha", "--random", "--bits", "128"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["gen", "--family", "qa1", "--n", "20", "--block", "10", "--C", "1/2", "--K", "1", "--step", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out.stderr)["message"].as_str().unwrap().contains("--seed"));
    let out = run(&["sweep", "--seq", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn alpha_variants() {
    let v = json(&ok(&["alpha", "--golden", "--bits", "64"]));
    assert_eq!(v["numerator"], "11400714819323198485");
    let v = json(&ok(&["alpha", "--rational", "1/4", "--bits", "8"]));
    assert_eq!(v["numerator"], "64");
    let out = run(&["alpha", "--sqrt", "9", "--bits", "64"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn three_gap_check_via_spacings() {
    let dir = TempDir::new().unwrap();
    let seq = dir.path().join("seq.json");
    let alpha = dir.path().join("alpha.json");
    let pts = dir.path().join("p.bin");
    ok(&["gen", "--family", "poly", "--coeffs", "1,0", "--n", "1000", "--out", p(&seq)]);
    ok(&["alpha", "--sqrt", "2", "--bits", "128", "--out", p(&alpha)]);
    ok(&["points", "--seq", p(&seq), "--alpha", p(&alpha), "--out", p(&pts)]);
    let v = json(&ok(&["spacings", "--points", p(&pts), "--max-distinct", "3"]));
    assert!(v["distinct_gap_count"].as_u64().unwrap() <= 3);
    // squares have many gaps: the requested check fails with exit code 3
    let out = run(&["spacings", "--points", p(&data("sample_points.bin")), "--max-distinct", "3"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out.stdout)["checks"][0]["passed"], false);
}

#[test]
fn energy_profile_classifies_progression() {
    let dir = TempDir::new().unwrap();
    let seq = dir.path().join("seq.json");
    ok(&["gen", "--family", "poly", "--coeffs", "1,0", "--n", "400", "--out", p(&seq)]);
    let v = json(&ok(&["energy", "--seq", p(&seq), "--grid", "100,200,400"]));
    assert_eq!(v["records"][0]["energy"], "666700");
    assert_eq!(v["classification"], "near_cubic");
}

#[test]
fn construction_pipeline() {
    let dir = TempDir::new().unwrap();
    let state = dir.path().join("state.json");
    ok(&["construct", "--family", "qa1", "--C", "1", "--K", "1", "--levels", "2", "--mode", "strict", "--out", p(&state)]);
    let v: Value = json(&std::fs::read(&state).unwrap());
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["conforming"], true);
    assert_eq!(v["lambda"], serde_json::json!(["7", "40", "41", "42", "43"]));
    assert_eq!(v["c2"], "1/8");

    let star = json(&ok(&["star", "--state", p(&state), "--c", "1/10"]));
    assert_eq!(star["passes"], true);
    assert_eq!(star["mu"][0], "6");

    let hits = json(&ok(&["hits", "--state", p(&state), "--alpha-seed", "3", "--count", "20"]));
    assert_eq!(hits["runs"].as_array().unwrap().len(), 20);
    let fraction = hits["hit_fraction"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&fraction));

    let alpha = dir.path().join("third.json");
    ok(&["alpha", "--rational", "1/3", "--bits", "128", "--out", p(&alpha)]);
    // λ₄ = 42 is divisible by 3
    let w = json(&ok(&["witness", "--state", p(&state), "--hit", "4", "--alpha", p(&alpha)]));
    assert_eq!(w["case"], "zero");
    assert_eq!(w["holds"], true);
    assert_eq!(w["scope"], "deviation witness at scale M_l");

    let out = run(&["witness", "--state", p(&state), "--hit", "2", "--alpha", p(&alpha)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn relaxed_mode_is_labelled() {
    let v = json(&ok(&["construct", "--levels", "4", "--mode", "relaxed"]));
    assert_eq!(v["conforming"], false);
    assert_eq!(v["growth_mode"], "relaxed");
    let out = run(&["construct", "--levels", "4", "--mode", "strict"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out.stderr)["message"].as_str().unwrap().contains("relaxed"));
}

#[test]
fn sweep_summary_and_worker_env() {
    let dir = TempDir::new().unwrap();
    let seq = dir.path().join("seq.json");
    ok(&["gen", "--family", "poly", "--coeffs", "1,0,0", "--n", "500", "--out", p(&seq)]);
    let args = ["sweep", "--seq", p(&seq), "--seed", "11", "--count", "5"];
    let one = bin().args(args).env("PAIRCORR_WORKERS", "1").output().unwrap();
    let many = bin().args(args).env("PAIRCORR_WORKERS", "4").output().unwrap();
    assert!(one.status.success() && many.status.success());
    assert_eq!(one.stdout, many.stdout);
    let v = json(&one.stdout);
    let (min, med, max) = (v["min"].as_f64().unwrap(), v["median"].as_f64().unwrap(), v["max"].as_f64().unwrap());
    assert!(min <= med && med <= max);

    let bad = bin().args(args).env("PAIRCORR_WORKERS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(json(&bad.stderr)["error"], "config");

    let out = run(&["sweep", "--seq", p(&seq), "--seed", "11", "--count", "3", "--max-median", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn wrong_schema_version_is_rejected() {
    let dir = TempDir::new().unwrap();
    let seq = dir.path().join("seq.json");
    std::fs::write(&seq, r#"{"schema_version": 9, "family": "custom", "values": ["1"]}"#).unwrap();
    let out = run(&["energy", "--seq", p(&seq), "--grid", "1,1,1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out.stderr)["error"], "config");
}
