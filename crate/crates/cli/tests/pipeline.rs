use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus/config.toml")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moralscope"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--output")
        .arg(out)
        .env("MORALSCOPE_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(stage: &str, out: &Path) {
    let o = run(&[stage], &config(), out);
    assert!(o.status.success(), "{stage}: {}", String::from_utf8_lossy(&o.stderr));
}

fn manifest(out: &Path, stage: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(stage).join("manifest.json")).unwrap()).unwrap()
}

fn data_lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().skip(1).count()
}

#[test]
fn annotation_stages_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    for stage in ["score", "sample", "aggregate", "split"] {
        ok(stage, out);
        assert_eq!(manifest(out, stage)["status"], "ok");
    }
    assert_eq!(data_lines(&out.join("sample/sample.csv")), 40);
    let agreement: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("aggregate/agreement.json")).unwrap()).unwrap();
    assert!(agreement.is_object());
    let gold = data_lines(&out.join("aggregate/gold.csv"));
    let excluded = data_lines(&out.join("aggregate/excluded.csv"));
    assert_eq!(gold + excluded, 60);
    assert_eq!(data_lines(&out.join("split/train.csv")), 20);
    assert_eq!(data_lines(&out.join("split/test.csv")), gold - 20);
}

#[test]
fn modeling_stages_write_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    for stage in ["growth", "score", "distribution", "fit", "curves", "per-channel"] {
        ok(stage, out);
    }
    assert_eq!(data_lines(&out.join("growth/windows.csv")), 6);
    assert!(out.join("curves/views_other_condemning.csv").exists());
    let per_channel = std::fs::read_to_string(out.join("per-channel/views.csv")).unwrap();
    assert!(per_channel.lines().any(|l| l.starts_with("UCus04,skipped")));
    assert!(per_channel.lines().any(|l| l.starts_with("UCus01,fitted")));
    let overdispersion = std::fs::read_to_string(out.join("fit/overdispersion.csv")).unwrap();
    assert_eq!(overdispersion.lines().count(), 4);
}

#[test]
fn seed_override_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok("validate", &a);
    let o = run(&["validate", "--seed-override", "split=99"], &config(), &b);
    assert!(o.status.success());
    let (ma, mb) = (manifest(&a, "validate"), manifest(&b, "validate"));
    assert_eq!(mb["seeds"]["split"], 99);
    assert_ne!(ma["config_sha256"], mb["config_sha256"]);
}

#[test]
fn missing_input_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = config().with_file_name("dataset.jsonl");
    let text = std::fs::read_to_string(config())
        .unwrap()
        .replace("\"dataset.jsonl\"", &format!("{:?}", dataset.display().to_string()))
        .replace("registry.jsonl", "nowhere.jsonl");
    let cfg = tmp.path().join("config.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&["validate"], &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("registry_path"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("surprise = 1\n{}", std::fs::read_to_string(config()).unwrap());
    let cfg = tmp.path().join("config.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&["validate"], &cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}
