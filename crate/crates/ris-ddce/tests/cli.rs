//! End-to-end checks of the `ris-ddce` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ris_ddce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-ddce"))
        .args(args)
        .env_remove("RIS_DDCE_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SMALL_SIM: [&str; 6] = [
    "--trials",
    "6",
    "--set",
    "sweep.values=[0.0, 10.0]",
    "--set",
    "series=[]",
];

#[test]
fn missing_config_exits_2_and_names_path() {
    let out = ris_ddce(&["analyze", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/scenario.toml"), "{}", stderr(&out));
}

#[test]
fn unknown_key_exits_2() {
    let out = ris_ddce(&["analyze", "fig2", "--set", "system.no_such_key=3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no_such_key"), "{}", stderr(&out));
}

#[test]
fn invalid_value_exits_2() {
    let out = ris_ddce(&["analyze", "fig2", "--mod", "6"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn bad_thread_env_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_ris-ddce"))
        .args(["analyze", "fig2"])
        .env("RIS_DDCE_THREADS", "many")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_writes_expected_header() {
    let out = ris_ddce(&["analyze", "fig2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("P_dBm,SE_PD,SE_DD,BER_PD,BER_DD1,BER_DD2"));
    assert_eq!(lines.count(), 21);
}

#[test]
fn analyze_series_scenario_has_series_column() {
    let series = r#"series=[{label="8-PSK"}, {label="16-PSK", psk=16}]"#;
    let out = ris_ddce(&["analyze", "fig2", "--set", series]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",series"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",16-PSK")).count(), 21);
}

fn simulate_to(dir: &Path, name: &str, config: &str, threads: &str) -> String {
    let csv = dir.join(name);
    let mut args = vec!["--threads", threads, "simulate", config, "--out", csv.to_str().unwrap()];
    args.extend(SMALL_SIM);
    let out = ris_ddce(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    fs::read_to_string(csv).unwrap()
}

#[test]
fn simulation_is_reproducible_and_config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = simulate_to(dir.path(), "a.csv", "fig4", "1");
    let again = simulate_to(dir.path(), "b.csv", "fig4", "2");
    assert_eq!(first, again, "same seed must give identical CSV across thread counts");

    let echo = dir.path().join("a.csv.config.toml");
    let echo_out = dir.path().join("c.csv");
    let out = ris_ddce(&["simulate", echo.to_str().unwrap(), "--out", echo_out.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(first, fs::read_to_string(&echo_out).unwrap());
    assert_eq!(
        fs::read_to_string(&echo).unwrap(),
        fs::read_to_string(dir.path().join("c.csv.config.toml")).unwrap()
    );
}

#[test]
fn different_seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate_to(dir.path(), "a.csv", "fig4", "1");
    let csv = dir.path().join("b.csv");
    let mut args = vec!["simulate", "fig4", "--seed", "99", "--out", csv.to_str().unwrap()];
    args.extend(SMALL_SIM);
    assert!(ris_ddce(&args).status.success());
    assert_ne!(a, fs::read_to_string(csv).unwrap());
}

#[test]
fn timing_column_only_on_request() {
    let mut args = vec!["simulate", "fig4", "--timing"];
    args.extend(SMALL_SIM);
    let out = ris_ddce(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",wall_time_s"));
}

#[test]
fn crossover_reports_each_order() {
    let out = ris_ddce(&["crossover", "fig2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("8-PSK: analytical crossover"), "{text}");
}

#[test]
fn validate_rejects_unknown_criterion() {
    let out = ris_ddce(&["validate", "--only", "42"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_passing_criterion_exits_0() {
    let out = ris_ddce(&["validate", "--only", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
}
