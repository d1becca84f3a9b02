use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use howire_core::forge::read_manifest;
use howire_core::metrics::{gt_as_predictions, load_ground_truth, EvalReport, SamplePredictions};
use howire_core::Execution;

fn howire(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_howire"))
        .args(args)
        .env_remove("HOWIRE_DATA_ROOT")
        .output()
        .unwrap()
}

fn generate(root: &Path, seed: &str) -> Output {
    howire(&["generate", "--seed", seed, "--solids", "10", "--views", "6", "--data-root", root.to_str().unwrap()])
}

fn read_all(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn generate_is_deterministic_and_split_by_solid() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = generate(a.path(), "42");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("generated "));
    assert!(generate(b.path(), "42").status.success());
    assert_eq!(read_all(a.path()), read_all(b.path()));

    let train = read_manifest(&a.path().join("train")).unwrap();
    let test = read_manifest(&a.path().join("test")).unwrap();
    assert_eq!((train.solid_ids().len(), test.solid_ids().len()), (9, 1));
    assert!(train.solid_ids().is_disjoint(&test.solid_ids()));
}

#[test]
fn generate_into_unwritable_root_fails_without_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = generate(&blocker.join("data"), "1");
    assert_eq!(out.status.code(), Some(2));
    assert!(!blocker.join("data").exists());
}

#[test]
fn stats_and_missing_manifest() {
    let dir = tempfile::tempdir().unwrap();
    assert!(generate(dir.path(), "3").status.success());
    let root = dir.path().to_str().unwrap();
    let out = howire(&["stats", "--data-root", root]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for q in ["J_vis", "J_hidden", "L_vis", "L_hidden"] {
        assert!(text.contains(q));
    }
    assert!(dir.path().join("stats.json").exists());
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(howire(&["stats", "--data-root", empty.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn data_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_howire"))
        .args(["generate", "--solids", "2", "--views", "4"])
        .env("HOWIRE_DATA_ROOT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("train/manifest.json").exists());
}

fn write_predictions(path: &Path, preds: &[SamplePredictions]) {
    fs::write(path, serde_json::to_string(preds).unwrap()).unwrap();
}

#[test]
fn eval_exit_codes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    assert!(generate(dir.path(), "5").status.success());
    let root = dir.path().to_str().unwrap();
    let split = dir.path().join("test");
    let gt = load_ground_truth(&read_manifest(&split).unwrap(), &split, Execution::Sequential).unwrap();

    let perfect = dir.path().join("perfect.json");
    write_predictions(&perfect, &gt_as_predictions(&gt));
    let report_path = dir.path().join("report.json");
    let out = howire(&["eval", "--data-root", root, "--predictions", perfect.to_str().unwrap(), "--output", report_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: EvalReport = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.tables.len(), 4);
    assert!(report.values().all(|v| v == 100.0));

    let empty = dir.path().join("empty.json");
    write_predictions(&empty, &[]);
    let out = howire(&["eval", "--data-root", root, "--predictions", empty.to_str().unwrap(), "--output", report_path.to_str().unwrap()]);
    assert!(out.status.success());
    let report: EvalReport = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report.values().all(|v| v == 0.0));

    let bogus = dir.path().join("bogus.json");
    let mut preds = gt_as_predictions(&gt);
    preds[0].sample_id = "s99999_v99".into();
    write_predictions(&bogus, &preds);
    let out = howire(&["eval", "--data-root", root, "--predictions", bogus.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s99999_v99"));
}

#[test]
fn oracle_check_and_negative_control() {
    let out = howire(&["oracle-check", "--solids", "5", "--views", "6", "--instances", "200"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let out = howire(&["oracle-check", "--solids", "5", "--views", "6", "--instances", "10", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("first visibility mismatch"));
}

#[test]
fn loss_check_worked_example() {
    let out = howire(&["loss-check"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["total"].as_f64().unwrap() - 15.2331).abs() < 1e-3);
}

#[test]
fn curate_export_refuses_partial_votes() {
    let dir = tempfile::tempdir().unwrap();
    assert!(generate(dir.path(), "8").status.success());
    let root = dir.path().to_str().unwrap();
    let out = howire(&["curate-export", "--data-root", root]);
    assert_ne!(out.status.code(), Some(0));
    let out = howire(&["curate-export", "--data-root", root, "--allow-partial"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("WARNING"));
    let first = fs::read(dir.path().join("curated.json")).unwrap();
    assert!(howire(&["curate-export", "--data-root", root, "--allow-partial"]).status.success());
    assert_eq!(first, fs::read(dir.path().join("curated.json")).unwrap());
}
