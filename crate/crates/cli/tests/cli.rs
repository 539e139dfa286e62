use std::path::Path;
use std::process::{Command, Output};

use gld_core::exponents::{exponent_form, ExponentQuery};
use gld_core::measures::{Channel, Distribution};
use gld_core::metrics::MetricSpec;
use gld_core::optimizer::GridSpec;
use serde_json::Value;
use tempfile::TempDir;

const BSC: &str = r#"{"input_size": 2, "output_size": 2, "matrix": [[0.9, 0.1], [0.1, 0.9]]}"#;

fn setup(config: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bsc.json"), BSC).unwrap();
    std::fs::write(dir.path().join("run.json"), config).unwrap();
    dir
}

fn gld(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gld")).args(args).current_dir(dir).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn matched_config(rate: f64) -> String {
    format!(r#"{{"channel": "bsc.json", "metric": {{"kind": "matched", "beta": 1.0}}, "rate": {rate}, "resolution": 16}}"#)
}

#[test]
fn constant_metric_exponent_is_zero() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "constant"}, "rate": 0.2}"#);
    let v = json(&gld(dir.path(), &["exponent", "--config", "run.json"]));
    assert_eq!(v["result"]["value"].as_f64().unwrap().abs(), 0.0);
}

#[test]
fn exponent_matches_library_bit_exactly() {
    let dir = setup(&matched_config(0.2));
    let v = json(&gld(dir.path(), &["exponent", "--config", "run.json"]));
    let w = Channel::bsc(0.1).unwrap();
    let q = ExponentQuery::new(0.2, Distribution::uniform(2), w.clone(), MetricSpec::matched(&w, 1.0).unwrap()).unwrap();
    let lib = exponent_form(&q, &GridSpec::new(16)).unwrap();
    assert_eq!(v["result"]["value"].as_f64().unwrap().to_bits(), lib.value.to_bits());
    assert_eq!(v["result"]["maxmin"].as_f64().unwrap().to_bits(), lib.maxmin_value.unwrap().to_bits());
    assert_eq!(v["result"]["form"], "expurgated");
}

#[test]
fn rate_flag_overrides_config() {
    let dir = setup(&matched_config(0.1));
    let v = json(&gld(dir.path(), &["exponent", "--config", "run.json", "--rate", "0.2"]));
    assert_eq!(v["config"]["rate"], 0.2);
    assert_eq!(v["result"]["rate"], 0.2);
}

#[test]
fn infinite_exponent_serializes_as_string() {
    let dir = setup(r#"{"channel": {"input_size": 2, "output_size": 2, "matrix": [[1, 0], [0, 1]]},
        "metric": {"kind": "matched"}, "rate": 0.2}"#);
    let v = json(&gld(dir.path(), &["exponent", "--config", "run.json"]));
    assert_eq!(v["result"]["value"], "inf");
    assert_eq!(v["result"]["expurgated"], "inf");
    let out = gld(dir.path(), &["exponent", "--config", "run.json", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "");
    assert_eq!(row[6], "1");
}

#[test]
fn malformed_channel_is_an_input_error() {
    let dir = setup(&matched_config(0.2));
    std::fs::write(dir.path().join("bsc.json"), "{\"input_size\": 2, \"matrix\": [[0.9, ").unwrap();
    let out = gld(dir.path(), &["exponent", "--config", "run.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_row_sum_reports_the_row() {
    let dir = setup(&matched_config(0.2));
    std::fs::write(dir.path().join("bsc.json"), r#"{"input_size": 2, "output_size": 2, "matrix": [[0.9, 0.1], [0.2, 0.9]]}"#).unwrap();
    let out = gld(dir.path(), &["exponent", "--config", "run.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 1 sums to"), "{err}");
}

#[test]
fn non_integral_composition_is_infeasible() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "matched"}, "composition": [0.3, 0.7], "rate": 0.2}"#);
    let out = gld(dir.path(), &["exponent", "--config", "run.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nearest valid denominator: 20"));
}

#[test]
fn invalid_rate_range_is_rejected() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "matched"}, "rates": {"start": 0.3, "end": 0.1, "step": 0.1}}"#);
    assert_eq!(gld(dir.path(), &["sweep", "--config", "run.json"]).status.code(), Some(2));
    assert_eq!(
        gld(dir.path(), &["sweep", "--config", "run.json", "--start", "0.1", "--end", "0.2", "--step", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(gld(dir.path(), &["exponent", "--config", "run.json", "--rate", "0.1", "--resolution", "1"]).status.code(), Some(2));
}

#[test]
fn single_point_sweep_has_one_row() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "matched"}, "rates": {"start": 0.1, "end": 0.1, "step": 0.05}}"#);
    let out = gld(dir.path(), &["sweep", "--config", "run.json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rate,exponent,maxmin,gap,rho_star,boundary_flag,infinite");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("1.00000000000e-1,"));
}

#[test]
fn constant_sweep_is_all_zero_and_ascending() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "constant"}, "rates": {"start": 0.05, "end": 0.5, "step": 0.15}}"#);
    let out = gld(dir.path(), &["sweep", "--config", "run.json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(2).map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for pair in rows.windows(2) {
        assert!(pair[0][0] < pair[1][0]);
    }
    assert!(rows.iter().all(|r| r[1].abs() < 1e-9));
}

#[test]
fn sweep_rerun_is_byte_identical_on_disk() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "emi"}, "rates": {"start": 0.05, "end": 0.25, "step": 0.1}}"#);
    assert_eq!(gld(dir.path(), &["sweep", "--config", "run.json", "--output", "a.csv"]).status.code(), Some(0));
    assert_eq!(gld(dir.path(), &["--workers", "3", "sweep", "--config", "run.json", "--output", "b.csv"]).status.code(), Some(0));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert!(!a.is_empty());
}

#[test]
fn simulate_is_reproducible() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "matched"}, "rate": 0.2,
        "simulation": {"n": 6, "M": 4, "seed": 9, "trials": 5000}}"#);
    let a = gld(dir.path(), &["simulate", "--config", "run.json"]);
    let b = gld(dir.path(), &["--workers", "8", "simulate", "--config", "run.json"]);
    assert_eq!(a.stdout, b.stdout);
    let c = gld(dir.path(), &["simulate", "--config", "run.json", "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_report_contents() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "matched"}, "rate": 0.2,
        "simulation": {"n": 6, "M": 4, "seed": 1}}"#);
    let v = json(&gld(dir.path(), &["simulate", "--config", "run.json", "--codebook-out", "code.txt"]));
    assert_eq!(v["per_message_error"]["method"], "exact");
    assert_eq!(v["per_message_error"]["values"].as_array().unwrap().len(), 4);
    assert_eq!(v["expurgated_indices"].as_array().unwrap().len(), 2);
    let checks = v["markov_checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    assert!(checks.iter().all(|c| c["holds"] == true));
    assert!((v["effective_rate"].as_f64().unwrap() - 4f64.ln() / 6.0).abs() < 1e-15);
    let report = &v["good_code_report"];
    assert_eq!(report["holds"].as_bool().unwrap(), report["worst_margin"] == "inf" || report["worst_margin"].as_f64().unwrap() >= 0.0);
    let code = std::fs::read_to_string(dir.path().join("code.txt")).unwrap();
    assert_eq!(code.lines().count(), 4);
    assert!(v.get("config").is_some());
}

#[test]
fn identical_codewords_err_half_the_time() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "matched"},
        "simulation": {"codewords": ["0 1 1 0", "0 1 1 0"], "epsilon": 0.05}}"#);
    let v = json(&gld(dir.path(), &["simulate", "--config", "run.json"]));
    for p in v["per_message_error"]["values"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 0.5).abs() < 1e-15);
    }
}

#[test]
fn simulate_falls_back_to_monte_carlo_over_budget() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "constant"},
        "simulation": {"n": 30, "M": 3, "trials": 2000, "seed": 2}}"#);
    let v = json(&gld(dir.path(), &["simulate", "--config", "run.json"]));
    assert_eq!(v["per_message_error"]["method"], "monte_carlo");
    assert_eq!(v["good_code_report"]["exhaustive"], false);
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "constant"}, "simulation": {"n": 30, "M": 3}}"#);
    assert_eq!(gld(dir.path(), &["simulate", "--config", "run.json"]).status.code(), Some(2));
}

#[test]
fn verify_quick_passes() {
    let dir = setup(&matched_config(0.2));
    let out = gld(dir.path(), &["verify", "--level", "quick", "--config", "run.json"]);
    let table = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{table}");
    assert!(table.contains("weak duality") && !table.contains("FAIL"));
}

#[test]
fn verify_rejects_a_broken_metric() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "matched", "beta": -1.0}, "rate": 0.2}"#);
    let out = gld(dir.path(), &["verify", "--config", "run.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("temperature"));
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = setup(r#"{"channel": "bsc.json", "metric": {"kind": "matched"}, "rate": 0.2, "resolutoin": 8}"#);
    assert_eq!(gld(dir.path(), &["exponent", "--config", "run.json"]).status.code(), Some(2));
}
