use std::path::Path;
use std::process::Command;

use saep_cli::cli_main;

fn argv(dir: &Path, args: &[&str]) -> Vec<String> {
    let mut v = vec!["saep".to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    v.push("--out".into());
    v.push(dir.display().to_string());
    v
}

#[test]
fn run_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.conf");
    std::fs::write(
        &cfg,
        "# 60 x 180 smoke run\nK = 180\nalpha = 1/3\nensemble = dct\ntrials = 2\nalgorithms = ep, saep\nseed = 5\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let code = cli_main(argv(&out, &["run", "--config", cfg.to_str().unwrap()]));
    assert_eq!(code, 0);
    for f in ["records.csv", "summary.json", "cavity_cdf.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let rows = saep::experiments::parse_records_csv(&std::fs::read_to_string(out.join("records.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.n_rows == 60));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["K"], 180);
    assert_eq!(summary["aggregates"].as_array().unwrap().len(), 2);
    // no temporary files left behind
    let names: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 3, "{names:?}");
}

#[test]
fn sweep_emits_one_aggregate_per_alpha_and_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let code = cli_main(argv(
        dir.path(),
        &["sweep", "--K", "60", "--alpha", "1/3,1/2,2/3", "--trials", "2", "--algorithm", "amp,saep"],
    ));
    assert_eq!(code, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["aggregates"].as_array().unwrap().len(), 6);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli_main(argv(dir.path(), &["run", "--bogus"])), 1);
    assert_eq!(cli_main(argv(dir.path(), &["run", "--trials", "0"])), 1);
    assert_eq!(cli_main(argv(dir.path(), &["run", "--alpha", "1/3,1/2", "--K", "30"])), 1);
    assert_eq!(cli_main(argv(dir.path(), &["run", "--config", "/nonexistent/c.conf"])), 1);
    assert_eq!(cli_main(["saep", "frobnicate"]), 1);
}

#[test]
fn validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli_main(argv(dir.path(), &["validate", "--draws", "20", "--K", "100"])), 0);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("validate.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn spectra_and_stability() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli_main(argv(dir.path(), &["spectra", "--K", "40", "--alpha", "1/2", "--ensemble", "dct"])), 0);
    let p: saep::ensembles::SpectralProfile<f64> =
        saep::ensembles::read_profile(&dir.path().join("spectrum.txt")).unwrap();
    assert!((p.alpha() - 0.5).abs() < 1e-12);

    assert_eq!(
        cli_main(argv(dir.path(), &["stability", "--K", "120", "--alpha", "1/3", "--algorithm", "saep"])),
        0
    );
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stability.json")).unwrap()).unwrap();
    assert!(s["runs"][0]["report"]["margin_x"].as_f64().unwrap() > 0.0);
}

#[test]
fn binary_reports_usage_errors() {
    let out = Command::new(env!("CARGO_BIN_EXE_saep")).arg("--nope").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = Command::new(env!("CARGO_BIN_EXE_saep")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}
