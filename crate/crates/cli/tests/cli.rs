use std::path::Path;
use std::process::{Command, Output};

fn spde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spde")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let file = dir.join("config.toml");
    std::fs::write(&file, body).unwrap();
    file.display().to_string()
}

const SIMULATE: &str = r#"
command = "simulate"
preset = "dean_kawasaki"
epsilon = 0.1
dt = 1e-4
T = 0.01
out = "unused"

[grid]
dim = 1
n = 32

[seeds]
base = 3

[initial]
kind = "cosine"
mean = 1.0
amplitude = 0.5
"#;

#[test]
fn selftest_passes_without_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = spde(&["selftest", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count() >= 5);
}

#[test]
fn simulate_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIMULATE);
    let out = dir.path().join("run");
    let o = spde(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS mass_balance"));
    let report = out.join("report.json");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["manifest"]["config"]["seeds"]["base"], 9);

    let o = spde(&["replay", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));

    let mut edited = json.clone();
    edited["manifest"]["config"]["seeds"]["base"] = 10.into();
    std::fs::write(&report, serde_json::to_string(&edited).unwrap()).unwrap();
    let o = spde(&["replay", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("MISMATCH"));
}

#[test]
fn misaligned_flowcheck_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = SIMULATE.replace("\"simulate\"", "\"flowcheck\"") + "\n[flow]\nshift = 0.000225\n";
    let cfg = write_config(dir.path(), &body);
    let o = spde(&[
        "flowcheck",
        "--config",
        &cfg,
        "--out",
        dir.path().join("f").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("flow.shift") && err.contains("not aligned"), "{err}");
}

#[test]
fn mismatched_or_missing_configs_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIMULATE);
    assert_eq!(spde(&["couple", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(spde(&["simulate"]).status.code(), Some(2));
    let bad = write_config(
        dir.path(),
        &SIMULATE.replace("epsilon = 0.1", "epsilon = 1.5\nsave_every = 0"),
    );
    let o = spde(&["simulate", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("epsilon") && err.contains("save_every"), "{err}");
}
