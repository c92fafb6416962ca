use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavity-decay"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn sweep_to(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["sweep", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for preset in ["fig2", "fig3", "fig4"] {
        let a = dir.path().join(format!("{preset}-a.csv"));
        let b = dir.path().join(format!("{preset}-b.csv"));
        assert!(sweep_to(&a, &["--preset", preset]).status.success());
        assert!(sweep_to(&b, &["--preset", preset]).status.success());
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{preset}");
    }
}

#[test]
fn stdout_matches_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    assert!(sweep_to(&path, &["--omega-count", "7"]).status.success());
    let out = run(&["sweep", "--omega-count", "7"]);
    assert!(out.status.success());
    assert_eq!(out.stdout, fs::read(&path).unwrap());
}

#[test]
fn verify_passes_on_default_and_lossless_media() {
    let out = run(&["sweep", "--verify", "--omega-count", "11"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let log = String::from_utf8_lossy(&out.stderr);
    assert!(log.lines().any(|l| l.starts_with("PASS")));
    assert!(!log.lines().any(|l| l.starts_with("FAIL")), "{log}");

    let out = run(&[
        "sweep",
        "--verify",
        "--omega-count",
        "11",
        "--strength",
        "0",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("lossless"));
}

#[test]
fn corrupted_closed_form_fails_verification() {
    let out = run(&[
        "sweep",
        "--verify",
        "--omega-count",
        "5",
        "--corrupt-closed-form",
        "1.001",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let log = String::from_utf8_lossy(&out.stderr);
    assert!(
        log.contains("FAIL closed-form coefficients vs linear solve"),
        "{log}"
    );
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["sweep", "--preset", "fig9"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--no-such-flag"]).status.code(), Some(1));
    let missing = dir.path().join("absent.toml");
    let out = run(&["sweep", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[geometry]\nsphere_radius = -2.0\n").unwrap();
    let out = run(&["sweep", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sphere_radius"));

    let out = run(&["sweep", "--onsager-fraction", "0.3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("onsager_fraction"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "preset = \"fig4\"\n[grid]\ncount = 4\n[output]\ncolumns = [\"omega\", \"k0_rc\"]\n",
    )
    .unwrap();
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--omega-count",
        "3",
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0], ["omega", "k0_rc"]);
    assert_eq!(rows.len(), 4);
    // fig4 cavity: k0 Rc = 2π · 0.03 at every frequency.
    let k0_rc: f64 = rows[1][1].parse().unwrap();
    assert!((k0_rc - 0.06 * std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn refined_grid_reproduces_shared_rows() {
    let coarse = run(&["sweep", "--omega-count", "11"]);
    let fine = run(&["sweep", "--omega-count", "21"]);
    let coarse = csv_rows(&String::from_utf8(coarse.stdout).unwrap());
    let fine = csv_rows(&String::from_utf8(fine.stdout).unwrap());
    assert_eq!(coarse[0], fine[0]);
    for (i, row) in coarse.iter().enumerate().skip(1) {
        assert_eq!(row, &fine[2 * i - 1], "row {i}");
    }
}

#[test]
fn json_output_by_extension_or_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.json");
    assert!(sweep_to(
        &path,
        &["--omega-count", "5", "--columns", "omega,gamma_loc_hat"]
    )
    .status
    .success());
    let rows: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let keys: Vec<_> = rows[0].as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["omega", "gamma_loc_hat"]);
    assert_eq!(rows[4]["omega"].as_f64(), Some(1.5));

    let out = run(&["sweep", "--omega-count", "2", "--format", "json"]);
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 2);
}
