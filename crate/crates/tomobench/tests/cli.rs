use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tomobench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomobench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("c.toml");
    fs::write(
        &path,
        "side_px = 32\nn_views = 8\nn_test = 2\nphoton_grid = [100, 1000]\nalgorithms = [\"fbp\", \"mle\"]\n[mle]\nmax_iters = 10\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = tomobench(
        &["sweep", "--config", &cfg, "--out", "results/"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("results/sweep.csv").exists());
    assert!(dir.path().join("results/manifest.json").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn missing_input_is_runtime_error_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = tomobench(
        &["recon", "--algo", "fbp", "missing_counts.dtns"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing_counts.dtns"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--bogus-flag", "sweep"][..],
        &["recon", "x.dtns"][..],
        &["recon", "--algo", "sart", "x"][..],
        &[][..],
    ] {
        let out = tomobench(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(tomobench(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn self_comparison_has_unit_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let out = tomobench(
        &[
            "phantom",
            "--kind",
            "shepp-logan",
            "--side",
            "64",
            "--out",
            "a.dtns",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = tomobench(&["metrics", "a.dtns", "a.dtns"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pearson_r"], 1.0);
    assert_eq!(report["scattering_l2"], 0.0);
}

#[test]
fn phantom_simulate_recon_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |args: &[&str]| {
        let out = tomobench(args, dir.path());
        assert_eq!(
            out.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run(&[
        "--config", &cfg, "--seed", "5", "phantom", "--out", "p.dtns",
    ]);
    run(&[
        "--config", &cfg, "--seed", "0", "simulate", "p.dtns", "--n0", "100000", "--out", "c.dtns",
    ]);
    for algo in ["fbp", "mle", "maptv"] {
        let name = format!("r_{algo}.dtns");
        run(&[
            "--config",
            &cfg,
            "recon",
            "--algo",
            algo,
            "--tv-weight",
            "1",
            "c.dtns",
            "--out",
            &name,
        ]);
        let out = tomobench(&["metrics", "p.dtns", &name], dir.path());
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(
            report["pearson_r"].as_f64().unwrap() > 0.5,
            "{algo}: {report}"
        );
    }
    let counts = tomobench::read_tensor(&dir.path().join("c.dtns")).unwrap();
    assert_eq!(counts.dims(), &[8, 46]);
    assert!(counts.as_u32().is_some());
}

#[test]
fn dataset_split_export() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = tomobench(
        &[
            "--config", &cfg, "dataset", "--split", "test", "--out", "ds",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = tomobench::RunManifest::read(&dir.path().join("ds/manifest.json")).unwrap();
    assert_eq!(m.files.len(), 1 + 2 * 2);
    m.verify(&dir.path().join("ds")).unwrap();
}

#[test]
fn bad_config_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "photon_grid = []\n").unwrap();
    let out = tomobench(&["sweep", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));
}
