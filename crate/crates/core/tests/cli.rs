//! The `straggler` binary: exit codes, output formats and configuration.

use std::path::Path;
use std::process::{Command, Output};

fn straggler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_straggler"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(straggler(&["analyze"]).status.code(), Some(2));
    assert_eq!(
        straggler(&["analyze", "-N", "6", "-B", "4"]).status.code(),
        Some(2)
    );
    assert_eq!(
        straggler(&["analyze", "-N", "6", "-B", "3", "--policy", "bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        straggler(&["simulate", "-N", "6", "-B", "3", "--samples", "10"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(straggler(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn guard_errors_exit_3() {
    let o = straggler(&["analyze", "-N", "6", "-B", "3", "--policy", "random-cc"]);
    assert_eq!(o.status.code(), Some(3));
    let o = straggler(&["analyze", "-N", "30", "-B", "30"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "balanced has a closed form at any size"
    );
    let counts = vec!["1"; 30].join(",");
    let policy = format!("vector:{counts}");
    let o = straggler(&["analyze", "-N", "30", "-B", "30", "--policy", &policy]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Monte Carlo"));
}

#[test]
fn io_errors_exit_4() {
    let o = straggler(&["sweep", "--config", "/nonexistent/sweep.toml"]);
    assert_eq!(o.status.code(), Some(4));
    let o = straggler(&[
        "coverage",
        "-B",
        "2",
        "-N",
        "4",
        "--out",
        "/nonexistent/dir/out.csv",
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn coverage_csv_has_fixed_columns() {
    let o = straggler(&["coverage", "-B", "1-3", "-N", "3,6"]);
    assert!(o.status.success());
    let mut reader = csv::Reader::from_reader(o.stdout.as_slice());
    let headers: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, ["B", "N", "exact"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    let p: f64 = rows[5][2].parse().unwrap();
    assert!((p - 540.0 / 729.0).abs() < 1e-8, "{:?}", rows[5]);
}

#[test]
fn analyze_json_reports_ratio_to_bound() {
    let o = straggler(&[
        "analyze",
        "-N",
        "6",
        "-B",
        "3",
        "--policy",
        "vector:3,2,1",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let row = &v[0];
    assert!((row["expected_time"].as_f64().unwrap() - 73.0 / 60.0).abs() < 1e-8);
    assert!((row["balanced_bound"].as_f64().unwrap() - 11.0 / 12.0).abs() < 1e-8);
    assert_eq!(row["majorizes_balanced"], serde_json::Value::Bool(true));
}

#[test]
fn analyze_text_is_key_value() {
    let o = straggler(&["analyze", "-N", "6", "-B", "3", "--policy", "cyclic"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let value = text
        .lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == "expected_time")
        .map(|(_, v)| v.trim().to_string());
    assert_eq!(value.as_deref(), Some("1.21666667"), "{text}");
}

#[test]
fn compare_fig4_orders_layouts() {
    let o = straggler(&["compare-fig4", "--samples", "20000", "--format", "csv"]);
    assert!(o.status.success());
    let mut reader = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn sweep_config_flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    let out = dir.path().join("out.csv");
    std::fs::write(
        &config,
        format!(
            "rates = [0.5, 1.0]\nB_values = [2, 3]\nN = 6\npolicies = [\"balanced\", \"vector:3,2,1\"]\n\
             n_samples = 2000\nseed = 1\noutput_path = {:?}\nformat = \"csv\"\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = straggler(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "-B",
        "3",
        "--seed",
        "9",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| &r[2] == "3" && &r[9] == "9"));
}

#[test]
fn sweep_config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "N = 6\nB_values = [3]\nsurprise = 1\n").unwrap();
    let o = straggler(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_config_round_trips() {
    let spec = straggler::cli::SweepSpec::default();
    let back = straggler::cli::SweepSpec::from_toml(&spec.to_toml()).unwrap();
    assert_eq!(spec, back);
}
