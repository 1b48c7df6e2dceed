use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hicontrast")).args(args).output().unwrap()
}

fn with_config(dir: &TempDir, sub: &str, json: &str, extra: &[&str]) -> Output {
    let cfg = dir.path().join("study.json");
    fs::write(&cfg, json).unwrap();
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

const MEDIUM: &str = r#""medium": {"dim": 1, "domain": [-1, 1], "inclusions": [[-0.5, 0.5]], "h": 0.01, "epsilon": 0.01}"#;

#[test]
fn spectrum_writes_csv() {
    let d = TempDir::new().unwrap();
    let o = with_config(&d, "spectrum", &format!(r#"{{{MEDIUM}, "task": "spectrum", "count": 3}}"#), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let f = d.path().join("out/spectrum.csv");
    assert_eq!(header(&f), "j,lambda,residual");
    assert_eq!(fs::read_to_string(f).unwrap().lines().count(), 4);
}

#[test]
fn spectrum_as_json_records() {
    let d = TempDir::new().unwrap();
    let o = with_config(&d, "spectrum", &format!(r#"{{{MEDIUM}, "task": "spectrum", "count": 2}}"#), &["--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("out/spectrum.json")).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["lambda"].as_f64().unwrap() > 0.0);
}

#[test]
fn limit_exact_with_traces() {
    let d = TempDir::new().unwrap();
    let cfg = format!(r#"{{{MEDIUM}, "task": "limit", "lambda_max": 50, "solver": "exact", "samples": 11}}"#);
    let o = with_config(&d, "limit", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&d.path().join("out/limit.csv")), "branch,index,lambda,omega,residual");
    assert_eq!(header(&d.path().join("out/trace_1.csv")), "x,u");
}

#[test]
fn limit_on_the_grid() {
    let d = TempDir::new().unwrap();
    let o = with_config(&d, "limit", &format!(r#"{{{MEDIUM}, "task": "limit", "lambda_max": 50}}"#), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.path().join("out/limit.csv").exists());
}

#[test]
fn dispersion_writes_bands_and_gaps() {
    let d = TempDir::new().unwrap();
    let cfg = r#"{"medium": {"dim": 1, "domain": [-1, 1], "inclusions": [[-0.5, 0.5]], "h": 0.01, "bc": {"bloch": 0.3}},
                  "task": "dispersion", "k_grid": [0.3, 0.9, 1.5], "eps_list": [0.01, 0], "count": 3, "solver": "exact"}"#;
    let o = with_config(&d, "dispersion", cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&d.path().join("out/bands.csv")), "k,epsilon,branch,lambda,omega");
    assert_eq!(header(&d.path().join("out/gaps.csv")), "epsilon,gap_lo,gap_hi");
}

#[test]
fn converge_passes_on_a_single_inclusion() {
    let d = TempDir::new().unwrap();
    let cfg = r#"{"medium": {"dim": 1, "domain": [-1, 1], "inclusions": [[-0.5, 0.5]], "h": 0.002},
                  "task": "converge", "eps_list": [0.004, 0.002, 0.001, 0.0005], "count": 2}"#;
    let o = with_config(&d, "converge", cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&d.path().join("out/converge.csv")), "branch,epsilon,lambda,flatness,divergent,swapped");
}

#[test]
fn config_errors_exit_2() {
    let d = TempDir::new().unwrap();
    let unknown = format!(r#"{{{MEDIUM}, "task": "spectrum", "cuont": 3}}"#);
    assert_eq!(with_config(&d, "spectrum", &unknown, &[]).status.code(), Some(2));
    assert_eq!(with_config(&d, "spectrum", "{ not json", &[]).status.code(), Some(2));
    let mismatch = format!(r#"{{{MEDIUM}, "task": "limit"}}"#);
    assert_eq!(with_config(&d, "spectrum", &mismatch, &[]).status.code(), Some(2));
    assert_eq!(run(&["spectrum"]).status.code(), Some(2));
    let bad_geom = r#"{"medium": {"dim": 1, "domain": [-1, 1], "inclusions": [[0.5, -0.5]], "h": 0.01}, "task": "spectrum"}"#;
    assert_eq!(with_config(&d, "spectrum", bad_geom, &[]).status.code(), Some(2));
}

#[test]
fn solver_errors_exit_3() {
    // the discrete operator needs ε > 0
    let d = TempDir::new().unwrap();
    let cfg = r#"{"medium": {"dim": 1, "domain": [-1, 1], "inclusions": [[-0.5, 0.5]], "h": 0.01, "epsilon": 0}, "task": "spectrum"}"#;
    assert_eq!(with_config(&d, "spectrum", cfg, &[]).status.code(), Some(3));
}

#[test]
fn validate_sphere() {
    let d = TempDir::new().unwrap();
    let cfg = r#"{"medium": {"dim": "radial", "inclusions": [0.5], "h": 0.001, "bc": "dirichlet"}, "task": "validate"}"#;
    let o = with_config(&d, "validate", cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.contains(" PASS ")).count(), 2, "{stdout}");
    assert!(d.path().join("out/validate.json").exists());
    assert_eq!(header(&d.path().join("out/validate.csv")), "id,name,pass,seconds,detail");
}
