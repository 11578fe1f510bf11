//! End-to-end checks of the command-line binary: exit codes, report files,
//! run-to-run determinism, and the offline/online split across processes.

use std::path::Path;
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ltmor"))
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(
        &path,
        r#"
[mesh]
n = 8

[source]
center = [0.1, -0.1]
width = 0.15

[wavelet]
alpha = 6.283185307179586
t0 = 2.5

[sampling]
m = 8

[rom]
r_values = [2, 4]

[time]
t_final = 2.0
steps = 100

[output]
directory = "unused"
stride = 20
field_times = [1.0, 2.0]
"#,
    )
    .unwrap();
    path
}

fn run_ok(args: &[&str]) -> Output {
    let out = binary().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "command {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn run_produces_reports_and_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = run_ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rel_L2"), "summary missing: {stdout}");
    assert!(stdout.contains("speed-up"), "summary missing: {stdout}");
    for file in [
        "rel_error.csv",
        "singular_values.csv",
        "timings.csv",
        "basis.bin",
        "metadata.txt",
        "field_hf_000050.txt",
        "field_hf_000100.txt",
        "field_rb_000050.txt",
        "field_rb_000100.txt",
    ] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }
    let rel = std::fs::read_to_string(out_dir.join("rel_error.csv")).unwrap();
    assert!(rel.starts_with("R,M,L2,H1\n"));
    assert_eq!(rel.lines().count(), 3, "one header and two basis sizes: {rel}");
}

#[test]
fn missing_key_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let text = std::fs::read_to_string(&cfg).unwrap();
    std::fs::write(&cfg, text.replace("alpha = 6.283185307179586\n", "")).unwrap();
    let out = binary()
        .args(["run", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("alpha"), "stderr does not name the key: {stderr}");
}

#[test]
fn identical_runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let (d1, d2) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&d1, &d2] {
        run_ok(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            "11",
        ]);
    }
    // timings.csv is wall-clock and excluded on purpose
    for file in [
        "rel_error.csv",
        "singular_values.csv",
        "basis.bin",
        "field_hf_000100.txt",
        "field_rb_000100.txt",
        "metadata.txt",
    ] {
        let a = std::fs::read(d1.join(file)).unwrap();
        let b = std::fs::read(d2.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn offline_online_split_matches_combined_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let combined = tmp.path().join("combined");
    let split = tmp.path().join("split");
    run_ok(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        combined.to_str().unwrap(),
    ]);
    run_ok(&[
        "offline",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        split.to_str().unwrap(),
    ]);
    run_ok(&[
        "online",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        split.to_str().unwrap(),
    ]);
    for file in ["rel_error.csv", "singular_values.csv"] {
        let a = std::fs::read(combined.join(file)).unwrap();
        let b = std::fs::read(split.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between combined and split pipelines");
    }
}

#[test]
fn online_without_basis_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = binary()
        .args([
            "online",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            tmp.path().join("empty").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn reference_subcommand_writes_fields_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out_dir = tmp.path().join("ref");
    run_ok(&[
        "reference",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out_dir.join("field_hf_000100.txt").exists());
    assert!(out_dir.join("timings.csv").exists());
    assert!(!out_dir.join("rel_error.csv").exists());
}
