//! End-to-end checks of the binary: exit codes, file placement, and the
//! wiring between subcommands. Runs are kept tiny (few steps, light
//! search budget) so the whole file stays in the seconds range.

use std::path::Path;
use std::process::{Command, Output};

fn zonomax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zonomax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    std::fs::write(
        &path,
        r#"
[search]
starts = 2
max_iters = 200
tol = 1e-5
branch_depth = 1

[sim]
steps = 5
profile = "random"
seed = 3
"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_trace_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = zonomax(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines.len(), 6, "header plus one row per step");
    assert!(lines[0].starts_with("t,x1,x2,u,"));

    let metrics = std::fs::read_to_string(out_dir.join("metrics.txt")).unwrap();
    let jp_line = metrics
        .lines()
        .find(|l| l.starts_with("j_p="))
        .expect("j_p present");
    let jp: f64 = jp_line["j_p=".len()..].trim().parse().unwrap();
    assert!(jp.is_finite() && jp > 0.0);
    assert!(!out_dir.join("fault.txt").exists(), "clean run dumps no fault file");
}

#[test]
fn seed_override_changes_the_random_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert!(zonomax(&["run", "--config", &cfg, "--out", out_a.to_str().unwrap()])
        .status
        .success());
    assert!(zonomax(&[
        "run", "--config", &cfg, "--seed", "99", "--out", out_b.to_str().unwrap()
    ])
    .status
    .success());
    let a = std::fs::read_to_string(out_a.join("trace.csv")).unwrap();
    let b = std::fs::read_to_string(out_b.join("trace.csv")).unwrap();
    assert_ne!(a, b, "different seed, different random profile");
}

#[test]
fn estimate_only_accepts_its_own_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("out");
    assert!(zonomax(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()])
        .status
        .success());
    let trace = out_dir.join("trace.csv");
    let out = zonomax(&["estimate-only", "--config", &cfg, "--trace", trace.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("faults=0"), "report line: {text}");
    assert!(text.contains("containment_failures=0"), "report line: {text}");
}

#[test]
fn compare_writes_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("cmp");
    let out = zonomax(&["compare", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out_dir.join("adaptive").join("trace.csv").exists());
    assert!(out_dir.join("robust").join("trace.csv").exists());
}

#[test]
fn verify_terminal_reports_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = zonomax(&["verify-terminal", "--config", &cfg, "--samples", "200"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("decrease"), "report: {text}");
}

#[test]
fn missing_config_fails_cleanly() {
    let out = zonomax(&["run", "--config", "/nonexistent/nope.toml"]);
    assert!(!out.status.success());
}

#[test]
fn rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[sim]\nstepz = 5\n").unwrap();
    let out = zonomax(&["run", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stepz") || err.contains("unknown"), "stderr: {err}");
}
