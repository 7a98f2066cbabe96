use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use zotnet::config::Config;
use zotnet::pipeline::read_results_csv;

fn zotnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zotnet")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path) -> PathBuf {
    let mut c = Config::default();
    c.simulation.duration_s = 7200.0;
    c.simulation.warmup_s = 60.0;
    c.development.duration_s = 1800.0;
    c.development.users_per_persona = 2;
    let path = dir.join("small.toml");
    c.save(&path).unwrap();
    path
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(zotnet(&["--help"]).status.code(), Some(0));
    assert_eq!(zotnet(&["--version"]).status.code(), Some(0));
    assert_eq!(zotnet(&[]).status.code(), Some(1));
    assert_eq!(zotnet(&["fly"]).status.code(), Some(1));
    assert_eq!(zotnet(&["gen-data"]).status.code(), Some(1));
    assert_eq!(zotnet(&["simulate", "--out", "x", "--policy", "best"]).status.code(), Some(1));
}

#[test]
fn missing_config_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = zotnet(&["gen-data", "--config", "/nonexistent/zotnet.toml", "--out", s(&dir.path().join("d.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim().lines().count(), 1, "{err}");
    assert!(err.contains("nonexistent"));
}

#[test]
fn unknown_config_key_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[cell]\nnum_rb = 9\n").unwrap();
    let out = zotnet(&["gen-data", "--config", s(&cfg), "--out", s(&dir.path().join("d.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_data_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    ok(&zotnet(&["gen-data", "--config", s(&cfg), "--seed", "7", "--out", s(&a)]));
    ok(&zotnet(&["gen-data", "--config", s(&cfg), "--seed", "7", "--out", s(&b)]));
    ok(&zotnet(&["gen-data", "--config", s(&cfg), "--seed", "8", "--out", s(&c)]));
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    assert_ne!(text, fs::read(&c).unwrap());
    let text = String::from_utf8(text).unwrap();
    // header plus 4 personas x 2 users x 1800 slots
    assert_eq!(text.lines().count(), 1 + 4 * 2 * 1800);
    assert!(text.starts_with("user_id,persona_id,ts_index,"));
}

#[test]
fn train_outputs_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let data = dir.path().join("d.csv");
    ok(&zotnet(&["gen-data", "--config", s(&cfg), "--out", s(&data)]));
    let m1 = dir.path().join("m1.txt");
    let m2 = dir.path().join("m2.txt");
    let out = zotnet(&["train", "--data", s(&data), "--config", s(&cfg), "--out", s(&m1)]);
    ok(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["report"]["phase1_accuracy"].as_f64().unwrap() > 0.9);
    assert!(report["report"]["phase2_rmse_mbps"].as_f64().is_some());
    ok(&zotnet(&["train", "--data", s(&data), "--config", s(&cfg), "--out", s(&m2)]));
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());

    let m3 = dir.path().join("m3.txt");
    let out = zotnet(&["train", "--data", s(&data), "--config", s(&cfg), "--unlabeled", "--out", s(&m3)]);
    ok(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["clusters"].as_u64(), Some(4));

    let empty = dir.path().join("empty.csv");
    let header = fs::read_to_string(&data).unwrap().lines().next().unwrap().to_string();
    fs::write(&empty, header + "\n").unwrap();
    let out = zotnet(&["train", "--data", s(&empty), "--out", s(&dir.path().join("m4.txt"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("m4.txt").exists());
}

#[test]
fn simulate_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let data = dir.path().join("d.csv");
    let model = dir.path().join("model.txt");
    ok(&zotnet(&["gen-data", "--config", s(&cfg), "--out", s(&data)]));
    ok(&zotnet(&["train", "--data", s(&data), "--config", s(&cfg), "--out", s(&model)]));

    let pers = dir.path().join("pers");
    let base = dir.path().join("base");
    let out = zotnet(&["simulate", "--config", s(&cfg), "--model", s(&model), "--policy", "personalized", "--out", s(&pers)]);
    ok(&out);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // baseline needs no model
    ok(&zotnet(&["simulate", "--config", s(&cfg), "--policy", "baseline", "--out", s(&base)]));
    assert_eq!(
        zotnet(&["simulate", "--config", s(&cfg), "--policy", "personalized", "--out", s(&dir.path().join("x"))])
            .status
            .code(),
        Some(2)
    );

    let rows = read_results_csv(&pers.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 7200 * 3);
    let total: f64 = rows.iter().map(|r| r.qos_p_mbps).sum();
    let reported = summary["total_provided_mbits"].as_f64().unwrap();
    assert!((total - reported).abs() <= 1e-6 * total);
    assert!(pers.join("model_after.txt").exists());
    assert!(!base.join("model_after.txt").exists());

    let cmp = dir.path().join("cmp");
    let out = zotnet(&["compare", s(&pers), s(&base), "--out", s(&cmp)]);
    ok(&out);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(cmp.join("comparison.json")).unwrap()).unwrap();
    let hourly = fs::read_to_string(cmp.join("hourly.csv")).unwrap();
    assert_eq!(hourly.lines().count(), 1 + 2);
    let mut reader = csv::Reader::from_reader(hourly.as_bytes());
    let saved: f64 = reader
        .deserialize::<zotnet::pipeline::HourlyPoint>()
        .map(|p| p.unwrap().saved_mbits)
        .sum();
    let total_saved = report["total_saved_mbits"].as_f64().unwrap();
    assert!((saved - total_saved).abs() < 1e-6);
    assert!(total_saved > 0.0);

    let same = dir.path().join("same");
    ok(&zotnet(&["compare", s(&pers), s(&pers), "--out", s(&same)]));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(same.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(report["total_saved_mbits"].as_f64(), Some(0.0));

    assert_eq!(zotnet(&["compare", s(&pers), s(&dir.path().join("nope")), "--out", s(&same)]).status.code(), Some(2));
}
