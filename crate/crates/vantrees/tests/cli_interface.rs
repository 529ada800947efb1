//! End-to-end tests of the `vantrees` binary: artifact layout, exit codes,
//! error anchoring, and byte determinism, all through the real executable.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vantrees"))
        .args(args)
        .output()
        .expect("spawn vantrees")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).expect("write config");
    path
}

const CONJUGATE: &str = r#"{
  "schema_version": 1,
  "model": {"family": "gaussian_location", "sigma": 1.0},
  "prior": {"family": "gaussian", "mean": 0.0, "tau": 1.0},
  "target": {"kind": "identity"}
}"#;

const LAM: &str = r#"{
  "schema_version": 1,
  "model": {"family": "gaussian_location"},
  "theta0": [0.0],
  "target": {"kind": "identity"},
  "lam": {"c_grid": [1.0], "n_grid": [400]},
  "numeric": {"seed": 11, "mc_draws": 500, "grid_per_axis": 3}
}"#;

#[test]
fn vt1_conjugate_pair_emits_both_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "vt1.json", CONJUGATE);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "vt1",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "both",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("wrote"), "stdout: {}", stdout(&out));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("vt1.json")).unwrap()).unwrap();
    let bound = json["report"]["bound"].as_f64().expect("scalar bound");
    assert!((bound - 0.5).abs() <= 1e-8, "bound {bound}");

    let csv = std::fs::read_to_string(out_dir.join("vt1.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "bound,bias_term,int_psi_prime_dQ,I_Q,int_IP_dQ,residual_key_eq,residual_delta_norm,grid_meta"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 8);
    let cell: f64 = row[0].parse().expect("numeric bound cell");
    assert!((cell - 0.5).abs() <= 1e-8);
    // 17 significant digits: mantissa of the scientific form carries 16
    // fractional digits.
    assert!(row[0].contains('e'), "cell not scientific: {}", row[0]);
}

#[test]
fn unknown_config_key_is_rejected_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad_key.json",
        "{\n  \"schema_version\": 1,\n  \"model\": {\"family\": \"gaussian_location\", \"sgima\": 1.0}\n}",
    );
    let out = run(&["fisher", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("unknown field `sgima`"), "stderr: {err}");
    assert!(err.contains("bad_key.json:3:"), "no line anchor: {err}");
}

#[test]
fn syntax_error_is_line_anchored() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "broken.json", "{\n  \"schema_version\": 1,,\n}");
    let out = run(&["fisher", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("broken.json:2:"), "no anchor: {err}");
}

#[test]
fn unsupported_schema_version_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "v99.json",
        r#"{"schema_version": 99, "model": {"family": "bernoulli"}}"#,
    );
    let out = run(&["fisher", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("schema_version 99"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn prior_model_dimension_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "dims.json",
        r#"{
  "schema_version": 1,
  "model": {"family": "gaussian_location"},
  "prior": {"family": "product_quartic_bump", "dim": 2, "radius": 1.0},
  "target": {"kind": "identity"}
}"#,
    );
    let out = run(&["vt1", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("dimension"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn unknown_task_and_missing_config_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "ok.json", CONJUGATE);

    let out = run(&["fischer", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("fisher"),
        "no task list: {}",
        stderr(&out)
    );

    let missing = dir.path().join("nope.json");
    let out = run(&["fisher", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("nope.json"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn pinned_task_guards_against_mixups() {
    let dir = tempfile::tempdir().unwrap();
    let pinned = CONJUGATE.replacen(
        "\"schema_version\": 1,",
        "\"schema_version\": 1,\n  \"task\": \"vt1\",",
        1,
    );
    let config = write_config(dir.path(), "pinned.json", &pinned);
    let out = run(&["fisher", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("pins"), "stderr: {}", stderr(&out));
}

#[test]
fn stochastic_task_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let no_seed = LAM.replace(r#""seed": 11, "#, "");
    let config = write_config(dir.path(), "lam_no_seed.json", &no_seed);
    let out = run(&["lam", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("seed"), "stderr: {}", stderr(&out));

    // The --seed flag fills the gap.
    let out_dir = dir.path().join("seeded");
    let out = run(&[
        "lam",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(out_dir.join("lam.csv").exists());
}

#[test]
fn lam_csv_is_byte_deterministic_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "lam.json", LAM);
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = run(&[
            "lam",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        runs.push(std::fs::read(out_dir.join("lam.csv")).unwrap());
    }
    assert_eq!(
        runs[0], runs[1],
        "same config and seed must reproduce bytes"
    );
}

#[test]
fn format_flag_selects_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let with_theta = CONJUGATE.replacen(
        "\"schema_version\": 1,",
        "\"schema_version\": 1,\n  \"theta0\": [0.0],",
        1,
    );
    let config = write_config(dir.path(), "fisher.json", &with_theta);
    for (format, kept, dropped) in [
        ("csv", "fisher.csv", "fisher.json"),
        ("json", "fisher.json", "fisher.csv"),
    ] {
        let out_dir = dir.path().join(format);
        let out = run(&[
            "fisher",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--format",
            format,
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        assert!(out_dir.join(kept).exists(), "{kept} missing");
        assert!(
            !out_dir.join(dropped).exists(),
            "{dropped} written despite --format {format}"
        );
    }
}

#[test]
fn broken_prior_fails_exactly_the_boundary_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "broken_prior.json",
        r#"{
  "schema_version": 1,
  "model": {"family": "gaussian_location"},
  "prior": {"family": "uniform_interval", "center": 0.0, "radius": 1.0},
  "numeric": {"seed": 24601}
}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "check-all",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stdout: {}", stdout(&out));
    let text = stdout(&out);
    let failures: Vec<&str> = text.lines().filter(|l| l.starts_with("[FAIL]")).collect();
    assert_eq!(failures.len(), 1, "failures: {failures:?}");
    assert!(
        failures[0].contains("prior-boundary-decay"),
        "{}",
        failures[0]
    );

    // Every CSV row carries a non-empty anchor column.
    let csv = std::fs::read_to_string(out_dir.join("check-all.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let anchor = line.rsplit(',').next().unwrap();
        assert!(!anchor.trim().is_empty(), "empty anchor in: {line}");
    }
}

#[test]
fn coarse_grids_pass_under_declared_relaxation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "coarse.json",
        r#"{
  "schema_version": 1,
  "model": {"family": "gaussian_location"},
  "numeric": {"seed": 24601, "grid_scale": 0.5, "threshold_relax": 4.0}
}"#,
    );
    let out = run(&[
        "check-all",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("vantrees") || stdout(&out).contains("task"));
}
