use std::path::Path;
use std::process::{Command, Output};

fn epibench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epibench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn last_row(csv: &str) -> Vec<f64> {
    csv.lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect()
}

#[test]
fn solve_defaults_write_57_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = epibench(&["solve", "--method", "euler", "--h", "0.25", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = read(dir.path(), "trajectory.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,S,I"));
    assert_eq!(lines.count(), 57);
    assert_eq!(last_row(&csv)[0], 14.0);

    let svg = read(dir.path(), "trajectory.svg");
    assert!(svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<polyline").count(), 4, "two solved plus two exact series");
}

#[test]
fn solve_sir_conserves_population_in_final_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = epibench(&[
        "solve", "--model", "sir", "--method", "rk4", "--h", "0.01",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = read(dir.path(), "trajectory.csv");
    assert!(csv.starts_with("t,S,I,R\n"));
    assert_eq!(csv.lines().count(), 1402);
    let row = last_row(&csv);
    assert!((row[1] + row[2] + row[3] - 763.0).abs() <= 1e-6);
    assert_eq!(read(dir.path(), "trajectory.svg").matches("<polyline").count(), 3);
}

#[test]
fn solve_without_infected_warns_and_skips_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let out = epibench(&["solve", "--i0", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
    let csv = read(dir.path(), "trajectory.csv");
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",762,0")));
    assert_eq!(read(dir.path(), "trajectory.svg").matches("<polyline").count(), 2);
}

#[test]
fn accuracy_csv_is_bit_stable_and_matches_table_values() {
    let a = epibench(&["accuracy", "--format", "csv"]);
    let b = epibench(&["accuracy", "--format", "csv"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 18);
    assert!(text.contains("si,euler,S,0.25,"));
    assert!(text.contains(",0.9585463\n"));
}

#[test]
fn accuracy_check_prints_passing_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = epibench(&["accuracy", "--check", "--format", "csv", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "checks.json")).unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["checks"].as_array().unwrap().len(), 8);
    for name in ["accuracy.csv", "accuracy.json", "accuracy.txt"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn bench_defaults_give_18_summary_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = epibench(&["bench", "--check", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read(dir.path(), "runtime_summary.csv").lines().count(), 1 + 18);
    assert_eq!(read(dir.path(), "runtime_runs.csv").lines().count(), 1 + 18 * 11);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "model = \"sir\"\nmethod = [\"rk4\"]\nh = [0.5]\n").unwrap();
    let out = epibench(&["solve", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,S,I,R\n"));
    assert_eq!(text.lines().count(), 1 + 29);

    let out = epibench(&["solve", "--config", cfg.to_str().unwrap(), "--h", "0.25", "--format", "csv"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1 + 57);
}

#[test]
fn usage_errors_exit_with_1() {
    for args in [
        &["bench", "--measured-runs", "1"][..],
        &["solve", "--model", "si", "--beta", "0.4"],
        &["solve", "--model", "si", "--r0", "1"],
        &["solve", "--h", "0.3"],
        &["solve", "--method", "nope"],
        &["accuracy", "--alpha", "-1"],
        &["frobnicate"],
    ] {
        let out = epibench(args);
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn empty_method_list_in_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "method = []\n").unwrap();
    let out = epibench(&["accuracy", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("method list is empty"));
}

#[test]
fn overflow_is_a_numerical_failure() {
    let out = epibench(&["solve", "--alpha", "1e300"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn help_exits_with_0_and_documents_precedence() {
    let out = epibench(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("command-line flags"));
    assert!(text.contains("--config TOML file"));
}
