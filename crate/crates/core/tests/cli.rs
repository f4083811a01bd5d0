mod common;

use std::process::Command;

fn akbr() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_akbr"));
    c.env_remove("AKBR_DATA_ROOT");
    c
}

#[test]
fn missing_dataset_names_the_path() {
    let out = akbr().args(["run", "--dataset", "no_such_dataset"]).output().unwrap();
    assert_ne!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no_such_dataset"), "{err}");
    assert_eq!(err.trim().lines().count(), 1, "{err}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = akbr().args(["run", "--frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = akbr().arg("dance").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gradcheck_passes() {
    let out = akbr().args(["gradcheck", "--seed", "7"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let err: f64 = text
        .split_whitespace()
        .nth(3)
        .and_then(|t| t.parse().ok())
        .unwrap_or_else(|| panic!("unexpected output {text}"));
    assert!(err < 1e-4);
}

#[test]
fn summary_reads_the_data_root_variable() {
    let root = common::mutag_dir().join("..");
    let out = akbr()
        .env("AKBR_DATA_ROOT", &root)
        .args(["summary", "--dataset", "MUTAG"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("graphs=188"));
}

#[test]
fn run_writes_report_and_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let data = tempfile::tempdir().unwrap();
    let d = common::triangle_fixture();
    akbr::tudataset::write_tudataset(&d, data.path().join("triangle_fixture")).unwrap();
    let out_dir = dir.path().join("out");
    let status = akbr()
        .args(["run", "--dataset", "triangle_fixture", "--epochs", "20", "--folds", "2", "--repeats", "2"])
        .arg("--data-root")
        .arg(data.path())
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    let scores: Vec<f64> = report["fold_accuracies"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()))
        .collect();
    assert_eq!(scores.len(), 4);
    // the stored aggregate is recomputable from the stored scores
    let mean = scores.iter().sum::<f64>() / 4.0;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
    assert!((report["mean_accuracy"].as_f64().unwrap() - mean).abs() < 1e-9);
    assert!((report["std_error"].as_f64().unwrap() - sd / 2.0).abs() < 1e-9);

    let curve = std::fs::read_to_string(out_dir.join("loss_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 4 * 20);
    let attention = std::fs::read_to_string(out_dir.join("attention.csv")).unwrap();
    assert!(attention.starts_with("epoch,feature_id,score\n"));
    assert!(out_dir.join("checkpoint.json").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let data = tempfile::tempdir().unwrap();
    akbr::tudataset::write_tudataset(&common::triangle_fixture(), data.path().join("triangle_fixture")).unwrap();
    let cfg = dir.path().join("toy.cfg");
    std::fs::write(&cfg, "# toy run\ndataset = triangle_fixture\nkernel = sp\nepochs = 50\nfolds = 2\nrepeats = 1\n").unwrap();
    let out_dir = dir.path().join("out");
    let status = akbr()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .args(["--epochs", "5"])
        .arg("--data-root")
        .arg(data.path())
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["kernel"], "sp");
    assert_eq!(report["config"]["epochs"], 5);
}

#[test]
fn features_and_gram_dumps() {
    let data = tempfile::tempdir().unwrap();
    akbr::tudataset::write_tudataset(&common::triangle_fixture(), data.path().join("triangle_fixture")).unwrap();
    let root = data.path().to_str().unwrap();
    let out = akbr()
        .args(["features", "--dataset", "triangle_fixture", "--kernel", "sp", "--data-root", root])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("20 "));
    assert_eq!(text.lines().count(), 21);
    let out = akbr().args(["gram", "--dataset", "triangle_fixture", "--data-root", root]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().next(), Some("20"));
}
