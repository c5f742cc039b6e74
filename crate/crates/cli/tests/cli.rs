use std::path::Path;
use std::process::{Command, Output};

fn tsgan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsgan")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = tsgan(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(dir: &Path, rel: &str) -> String {
    dir.join(rel).display().to_string()
}

fn recorded_digest(manifest: &Path, file: &str) -> String {
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
    m["outputs"].as_array().unwrap().iter().find(|o| o["path"] == file).unwrap()["sha256"].as_str().unwrap().to_string()
}

#[test]
fn synthetic_fixture_digest_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "d");
    ok(&["synth-data", "--kind", "jump", "--rows", "2000", "--seed", "1", "--out-dir", &out]);
    let text = std::fs::read_to_string(dir.path().join("d/synth_jump.csv")).unwrap();
    assert_eq!(text.lines().count(), 2001);
    assert!(text.starts_with("Date,Open,High,Low,Close,Adj Close,Volume\n"));
    let digest = recorded_digest(&dir.path().join("d/synth-data.manifest.json"), "synth_jump.csv");
    assert_eq!(digest, PINNED_JUMP_DIGEST);
}

const PINNED_JUMP_DIGEST: &str = "066233a7480334f6b603f1ff9542fbdb4eb890d72f6bbd105780bb8d5a2ef2ae";

#[test]
fn wgan_training_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "d");
    ok(&["synth-data", "--kind", "sine", "--rows", "200", "--out-dir", &data]);
    let csv = p(dir.path(), "d/synth_sine.csv");
    let cfg = p(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"data": {"seq_len": 10, "horizon": 5}, "train": {"epochs": 2}}"#).unwrap();
    for run in ["a", "b"] {
        let out = p(dir.path(), run);
        ok(&["train", "--model", "wgan", "--input", &csv, "--seed", "7", "--preset", "desk", "--config", &cfg, "--out-dir", &out]);
    }
    for f in ["checkpoint/checkpoint.bin", "checkpoint/checkpoint.json", "loss_trace.csv"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(f)).unwrap(), std::fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn misspelled_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"train": {"learning_rte": 0.1}}"#).unwrap();
    let out = tsgan(&["synth-data", "--kind", "ar1", "--config", &cfg, "--out-dir", &p(dir.path(), "o")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rte"));
}

#[test]
fn unknown_subcommand_and_preset_exit_with_usage_code() {
    assert_eq!(tsgan(&["bogus"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = tsgan(&["synth-data", "--kind", "ar1", "--preset", "nope", "--out-dir", &p(dir.path(), "o")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tsgan(&["ingest", "--input", &p(dir.path(), "absent.csv"), "--out-dir", &p(dir.path(), "o")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_in_different_bases_do_not_merge() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "d");
    ok(&["synth-data", "--kind", "ar1", "--rows", "300", "--out-dir", &data]);
    let csv = p(dir.path(), "d/synth_ar1.csv");
    let cfg = p(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"data": {"seq_len": 12, "horizon": 10}, "train": {"epochs": 1}, "eval": {"horizons": [5, 10]}}"#).unwrap();
    let common = ["--preset", "desk", "--config", cfg.as_str()];
    let run = |args: &[&str]| {
        let mut a = args.to_vec();
        a.extend(common);
        tsgan(&a)
    };
    assert!(run(&["train", "--model", "gru", "--input", &csv, "--out-dir", &p(dir.path(), "t")]).status.success());
    let ck = p(dir.path(), "t/checkpoint");
    for (basis, out) in [("scaled", "s"), ("original", "o")] {
        let o = run(&["evaluate", "--checkpoint", &ck, "--input", &csv, "--basis", basis, "--out-dir", &p(dir.path(), out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let merged = run(&[
        "evaluate",
        "--reports",
        &p(dir.path(), "s/metrics.json"),
        &p(dir.path(), "o/metrics.json"),
        "--out-dir",
        &p(dir.path(), "m"),
    ]);
    assert_eq!(merged.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&merged.stderr).contains("bases"));

    let same = run(&["compare", "--reports", &p(dir.path(), "s/metrics.json"), "--out-dir", &p(dir.path(), "c")]);
    assert!(same.status.success());
    let table = std::fs::read_to_string(dir.path().join("c/comparison.csv")).unwrap();
    assert!(table.starts_with("MODEL,RMSE,MAPE,HIDDEN_LAYERS,EPOCHS,RMSE_5,MAPE_5,RMSE_10,MAPE_10\nGRU,"));
}

#[test]
fn replay_refuses_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth-data", "--kind", "ar1", "--rows", "120", "--out-dir", &p(dir.path(), "d")]);
    let csv = p(dir.path(), "d/synth_ar1.csv");
    ok(&["ingest", "--input", &csv, "--out-dir", &p(dir.path(), "i")]);
    let manifest = p(dir.path(), "i/ingest.manifest.json");
    ok(&["--replay", &manifest, "--out-dir", &p(dir.path(), "r")]);
    assert_eq!(
        std::fs::read(dir.path().join("i/repaired.csv")).unwrap(),
        std::fs::read(dir.path().join("r/repaired.csv")).unwrap()
    );
    std::fs::write(&csv, "Date,Open,High,Low,Close,Adj Close,Volume\n").unwrap();
    assert_eq!(tsgan(&["--replay", &manifest, "--out-dir", &p(dir.path(), "r2")]).status.code(), Some(2));
}
