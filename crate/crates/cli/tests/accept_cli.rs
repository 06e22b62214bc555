use std::io::Write;
use std::process::Command;

use clap::Parser;
use jsonschema::JSONSchema;
use serde_json::Value;
use wavekahler_cli::args::{Cli, Format};
use wavekahler_cli::{run, RunConfig, Task, REPORT_SCHEMA};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wavekahler"));
    c.env("WAVEKAHLER_THREADS", "2");
    c
}

fn config(args: &[&str]) -> RunConfig {
    let mut full = vec!["wavekahler"];
    full.extend_from_slice(args);
    RunConfig::from_cli(&Cli::try_parse_from(full).unwrap()).unwrap()
}

fn assert_valid(json: &str) {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let compiled = JSONSchema::compile(&schema).unwrap();
    let doc: Value = serde_json::from_str(json).unwrap();
    let msgs: Vec<String> = match compiled.validate(&doc) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| e.to_string()).collect(),
    };
    assert!(msgs.is_empty(), "schema violations: {msgs:?}");
}

#[test]
fn darboux_example_passes_with_valid_report() {
    let out = bin()
        .args(["check", "wave", "--base", "torus4", "--H", "sin(theta)*cos(z1)", "--points", "100", "--seed", "7"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_valid(&text);
    let doc: Value = serde_json::from_str(&text).unwrap();
    let darboux = doc.as_array().unwrap().iter().find(|r| r["check"] == "prop_darboux").unwrap();
    assert!(darboux["max_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(darboux["points"], 100);
}

#[test]
fn hirzebruch_table_has_the_expected_first_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let out = bin()
        .args(["solve", "hirzebruch", "--h0", "1", "--grid", "200", "--format", "csv", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["t", "h", "h_prime", "H_prime", "lambda", "spread"]);
    let rows: Vec<Vec<f64>> = rdr.records().map(|r| r.unwrap().iter().map(|s| s.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 200);
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[0][4] - 2.0).abs() < 1e-12);
    assert!((rows[199][4] - 2.0 * 3f64.sqrt()).abs() < 1e-9);
}

#[test]
fn kahler_flat_identities_are_tiny() {
    let out = run(&config(&["check", "identities", "--structure", "kahler-flat", "--per-point"])).unwrap();
    assert!(out.pass());
    let rep = &out.reports[0];
    assert!(rep.max_residual < 1e-13);
    assert_eq!(rep.per_point.as_ref().unwrap().len(), 20);
    assert_valid(&out.json());
}

#[test]
fn same_seed_gives_identical_bytes() {
    let args = ["check", "identities", "--structure", "wave-sphere", "--points", "6", "--seed", "11", "--per-point"];
    let a = bin().args(args).output().unwrap();
    let b = bin().env("WAVEKAHLER_THREADS", "1").args(args).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let c = bin().args(["check", "identities", "--structure", "wave-sphere", "--points", "6", "--seed", "12", "--per-point"]).output().unwrap();
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn breaches_exit_nonzero_with_detail() {
    // No floating-point residual meets a tolerance of 1e-30.
    let out = bin().args(["check", "wave", "--base", "sphere", "--H", "z", "--tol", "1e-30"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_valid(&text);
    let doc: Value = serde_json::from_str(&text).unwrap();
    let failed: Vec<&Value> = doc.as_array().unwrap().iter().filter(|r| r["pass"] == false).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|r| r["per_point"].is_array()));
}

#[test]
fn hard_errors_exit_two() {
    let phi = bin().args(["check", "wave", "--base", "torus2", "--H", "sin(phi)"]).output().unwrap();
    assert_eq!(phi.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&phi.stderr).contains("phi"));
    let bad_tol = bin().args(["check", "wave", "--tol", "0"]).output().unwrap();
    assert_eq!(bad_tol.status.code(), Some(2));
    let theta = bin().args(["check", "extremal", "--base", "sphere", "--H", "z*cos(theta)"]).output().unwrap();
    assert_eq!(theta.status.code(), Some(2));
    let unknown = bin().args(["check", "identities", "--structure", "klein-bottle"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "# sample\npoints = 3\nseed = 5\ntol = 1e-7\nbase = sphere\nH = z + x  # trailing comment\nformat = csv").unwrap();
    let p = path.to_str().unwrap();
    let cfg = config(&["check", "wave", "--config", p, "--seed", "9"]);
    assert_eq!(cfg.task, Task::CheckWave);
    assert_eq!((cfg.points, cfg.seed, cfg.atol), (3, 9, Some(1e-7)));
    assert_eq!(cfg.preset.as_deref(), Some("sphere"));
    assert_eq!(cfg.expression("H"), Some("z + x"));
    assert_eq!(cfg.format, Format::Csv);
    let cfg = config(&["check", "wave", "--config", p, "--base", "torus2", "--H", "z", "--format", "json"]);
    assert_eq!(cfg.preset.as_deref(), Some("torus2"));
    assert_eq!(cfg.expression("H"), Some("z"));
    assert_eq!(cfg.format, Format::Json);
}

#[test]
fn config_validation() {
    let mut cfg = RunConfig::new(Task::CheckWave);
    assert!(cfg.apply_text("points = many").is_err());
    assert!(cfg.apply_text("colour = blue").is_err());
    assert!(cfg.apply_text("just words").is_err());
    cfg.apply_text("points = 0").unwrap();
    assert!(cfg.validate().is_err());
    cfg.points = 1;
    cfg.atol = Some(-1e-9);
    assert!(cfg.validate().is_err());
    cfg.atol = None;
    cfg.rtol = 0.0;
    assert!(cfg.validate().is_err());
}

#[test]
fn sphere_from_table_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "zeta,H").unwrap();
    for i in 0..=40 {
        let z = -1.0 + 0.05 * i as f64;
        writeln!(f, "{z},{}", 2.0 * z).unwrap();
    }
    drop(f);
    let mut cfg = config(&["solve", "sphere", "--grid", "80"]);
    cfg.table = Some(path);
    let out = run(&cfg).unwrap();
    assert!(out.pass(), "{}", out.json());
    let table = out.table.as_ref().unwrap();
    assert_eq!(table.rows.len(), 81);
    for row in &table.rows {
        assert!((row[1] - (1.0 - 3.0 * row[0] * row[0]) / 12.0).abs() < 1e-8);
    }
    assert_valid(&out.json());
}

#[test]
fn csv_check_output_lists_every_residual() {
    let out = bin().args(["check", "extremal", "--base", "sphere", "--H", "z", "--points", "3", "--format", "csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let n = rdr.records().count();
    // Eight mechanism parts plus the total, per point.
    assert_eq!(n, 3 * 9);
}

#[test]
fn schema_and_presets_subcommands() {
    let schema = bin().arg("report").output().unwrap();
    assert_eq!(schema.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&schema.stdout).unwrap();
    assert_eq!(v["type"], "array");
    let presets = String::from_utf8(bin().arg("presets").output().unwrap().stdout).unwrap();
    for name in ["torus4", "kahler-flat", "hirzebruch-euler", "solved-sphere"] {
        assert!(presets.contains(name));
    }
}

#[test]
fn thread_variable_is_validated() {
    let out = bin().env("WAVEKAHLER_THREADS", "lots").args(["check", "wave"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
