//! Integration tests of the command-line surface and its exit codes
//! (0 = success, 2 = config error, 3 = numerical failure).

use std::process::Command;

fn foilrom() -> Command {
    Command::new(env!("CARGO_BIN_EXE_foilrom"))
}

const SMALL_CONFIG: &str = r#"
n_train = 12
n_test = 8

[fom]
dt = 0.02

[dyas]
n_samples = 30

[eval]
times = [10.0, 20.0, 30.0]

[forecast]
times = [25.0, 30.0]
"#;

#[test]
fn pipeline_subcommand_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, SMALL_CONFIG).unwrap();
    let out = dir.path().join("out");

    let output = foilrom()
        .args(["--config"])
        .arg(&config_path)
        .args(["--out"])
        .arg(&out)
        .args(["--quiet", "pipeline"])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    // --quiet suppresses the summary
    assert!(output.stdout.is_empty());
    for artifact in [
        "report.json",
        "timings.json",
        "ensemble.csv",
        "forecasts.csv",
        "errors_full.csv",
        "errors_reduced.csv",
    ] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n_train"], 12);
    assert_eq!(report["frozen_parameters"][0]["name"], "c1");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, "n_trian = 70\n").unwrap();
    let output = foilrom()
        .args(["--config"])
        .arg(&config_path)
        .arg("pipeline")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error"), "{stderr}");
}

#[test]
fn invalid_config_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, "[fom]\nwindow = [20.0, 12.0]\n").unwrap();
    let output = foilrom()
        .args(["--config"])
        .arg(&config_path)
        .arg("sample")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn degenerate_data_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // an identically-zero ensemble has no usable singular values
    let ensemble_path = dir.path().join("zero.csv");
    std::fs::write(&ensemble_path, "t,s1,s2\n0,0,0\n1,0,0\n2,0,0\n").unwrap();
    let output = foilrom()
        .args(["--out"])
        .arg(dir.path())
        .args(["dmd-fit", "--ensemble"])
        .arg(&ensemble_path)
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn sample_and_deform_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("geo");
    let status = foilrom()
        .args(["--out"])
        .arg(&out)
        .args(["--quiet", "sample", "--n", "4"])
        .status()
        .unwrap();
    assert!(status.success());
    let samples = std::fs::read_to_string(out.join("samples.csv")).unwrap();
    assert!(samples.starts_with("sample_id,c1,c2,c3,c4,c5,d1,d2,d3,d4,d5"));
    assert_eq!(samples.lines().count(), 5);

    let status = foilrom()
        .args(["--out"])
        .arg(&out)
        .args([
            "--quiet",
            "deform",
            "--mu",
            "0.01,0.02,0.01,0,0,0.01,0,0.005,0,0",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("deformed_profile.csv").exists());
    assert!(out.join("morphed_mesh.csv").exists());
}

#[test]
fn wrong_mu_length_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let output = foilrom()
        .args(["--out"])
        .arg(dir.path())
        .args(["deform", "--mu", "0.01,0.02"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn fom_then_fit_then_forecast_chain() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, SMALL_CONFIG).unwrap();
    let out = dir.path().join("chain");

    for args in [
        vec!["fom-run"],
        vec!["dmd-fit"],
        vec!["dmd-forecast", "--times", "21,25,30"],
        vec!["dyas"],
        vec!["gpr-compare"],
        vec!["sweeps"],
    ] {
        let output = foilrom()
            .args(["--config"])
            .arg(&config_path)
            .args(["--out"])
            .arg(&out)
            .args(["--quiet"])
            .args(&args)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let forecasts = std::fs::read_to_string(out.join("forecasts.csv")).unwrap();
    assert_eq!(forecasts.lines().count(), 4); // header + 3 times
    assert!(out.join("dyas_w1_t6.csv").exists());
    assert!(out.join("errors_full.csv").exists());
    assert!(out.join("errors_reduced.csv").exists());
    assert!(out.join("sweep_dmd_dt.csv").exists());
    assert!(out.join("sweep_gpr_train.csv").exists());

    // missing model file is a config-level error
    let output = foilrom()
        .args(["--out"])
        .arg(dir.path().join("empty"))
        .args(["dmd-forecast", "--times", "21"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn seed_override_changes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let out_c = dir.path().join("c");
    for (out, seed) in [(&out_a, "1"), (&out_b, "1"), (&out_c, "2")] {
        let status = foilrom()
            .args(["--out"])
            .arg(out)
            .args(["--seed", seed, "--quiet", "sample", "--n", "3"])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(out_a.join("samples.csv")).unwrap();
    let b = std::fs::read(out_b.join("samples.csv")).unwrap();
    let c = std::fs::read(out_c.join("samples.csv")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
