//! End-to-end checks of the `noisy-stm` binary: worked budget examples,
//! exit-code contract, artifact layout, and the thread-count override.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noisy-stm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

/// Value of a `name value` row printed by the budget table.
fn table_value(text: &str, name: &str) -> String {
    text.lines()
        .find_map(|line| line.strip_prefix(name))
        .unwrap_or_else(|| panic!("row `{name}` missing in:\n{text}"))
        .trim()
        .to_string()
}

#[test]
fn budget_strongly_convex_worked_example() {
    let out = run(&["budget", "--regime", "sc", "--L", "2", "--mu", "0.5", "--R", "1", "--eps", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(table_value(&text, "regime"), "strongly-convex");
    assert_eq!(table_value(&text, "delta_max"), "2.035224e-2");
    assert_eq!(table_value(&text, "iterations"), "34");
}

#[test]
fn budget_linear_system_worked_example() {
    let out = run(&["budget", "--regime", "linsys", "--L", "3", "--R", "1", "--Rstar", "2", "--eps1", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(table_value(&text, "regime"), "linear-system");
    assert_eq!(table_value(&text, "iterations"), "21");
}

#[test]
fn budget_regularized_worked_example() {
    let out = run(&["budget", "--regime", "reg", "--L", "2", "--R", "1", "--eps", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(table_value(&text, "mu"), "6.666667e-3");
}

#[test]
fn budget_missing_flag_is_a_usage_error() {
    let out = run(&["budget", "--regime", "sc", "--L", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("needs --mu"));
}

#[test]
fn budget_unknown_regime_is_a_usage_error() {
    let out = run(&["budget", "--regime", "smooth"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown budget regime"));
}

#[test]
fn verify_passes_and_prints_every_check() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("all 23 invariants hold"), "summary missing:\n{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_scope_restricts_to_one_module() {
    let out = run(&["verify", "--scope", "sequences"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
    assert!(text.contains("all 4 invariants hold"));
}

#[test]
fn verify_poison_fails_the_recurrence_check_with_exit_1() {
    let out = run(&["verify", "--poison", "recurrence"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL  alpha-recurrence-residual"));
    assert!(stderr(&out).contains("invariant alpha-recurrence-residual"));
}

#[test]
fn help_prints_to_stdout_and_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("noisy-stm"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

const RUN_CONFIG: &str = "\
seed = 11
repetitions = 2

[problem]
kind = \"diagonal-quadratic\"
lambdas = [0.5, 1.0, 2.0]

[solver]
algorithm = \"stm\"
iterations = 25

[noise]
kind = \"absolute\"
delta = 0.05
";

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_config_echo_repetition_csvs_and_mean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RUN_CONFIG);
    let out_dir = dir.path().join("out");
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    for name in ["config.toml", "rep_000.csv", "rep_001.csv", "mean.csv"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let mean = std::fs::read_to_string(out_dir.join("mean.csv")).unwrap();
    assert!(mean.starts_with("iter,f_gap,"));
    assert!(!stdout(&out).is_empty());
}

#[test]
fn missing_config_flag_is_a_usage_error() {
    let out = run(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("needs --config"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("typo = 1\n{RUN_CONFIG}"));
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown field"));
}

#[test]
fn forced_serial_run_is_byte_identical_to_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RUN_CONFIG);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let default = run(&["run", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert_eq!(default.status.code(), Some(0));
    let serial = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("NOISY_STM_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(serial.status.code(), Some(0));
    for name in ["rep_000.csv", "rep_001.csv", "mean.csv"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name} differs between parallel and serial"
        );
    }
}

#[test]
fn malformed_thread_env_is_a_usage_error() {
    let out = bin().args(["verify", "--scope", "geometry"]).env("NOISY_STM_THREADS", "two").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("NOISY_STM_THREADS"));
}

#[test]
fn threshold_reports_per_seed_and_summary_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "\
seed = 3
repetitions = 2

[problem]
kind = \"diagonal-quadratic\"
lambdas = [0.5, 1.0]

[solver]
algorithm = \"stm\"
iterations = 30

[noise]
kind = \"relative\"
alpha = 0.0
mode = \"shrink\"
",
    );
    let out = run(&["threshold", "--config", cfg.to_str().unwrap(), "--probe-iters", "40"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("seed  0: alpha* = 1.000000"));
    assert!(text.contains("median 1.000000"));
}
