mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

use common::{attack, casestudy_path, town};

fn citysim(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_citysim"));
    cmd.args(args).env_remove("CITYSIM_SEED").env_remove("RUST_LOG");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn scenario_file(dir: &Path, v: &Value) -> String {
    let path = dir.join("scenario.json");
    fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn small_town() -> Value {
    let mut t = town();
    t["hazards"] = json!([attack("a", 20, "ict-c", "attacker")]);
    t["mitigations"] = json!({"cybersecurity": [{"target": {"role": "cyber-infrastructure"},
        "overrides": {"recovery_ticks": {"scale": 0.5}}}]});
    t
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn validate_accepts_the_case_study() {
    let o = citysim(&["validate", casestudy_path().to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validation_failures_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = town();
    t.as_object_mut().unwrap().remove("seed");
    let o = citysim(&["validate", &scenario_file(dir.path(), &t)], &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    let mut t = town();
    t["hazards"] = json!([attack("a", 3, "ict-nowhere", "attacker")]);
    let path = scenario_file(dir.path(), &t);
    let o = citysim(&["run", &path, "--out", dir.path().join("out").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ict-nowhere"));

    let path = scenario_file(dir.path(), &small_town());
    let o = citysim(&["run", &path, "--variant", "moat"], &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn io_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = citysim(&["validate", dir.path().join("missing.json").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 3);

    let path = scenario_file(dir.path(), &small_town());
    let blocker = dir.path().join("not-a-dir");
    fs::write(&blocker, "").unwrap();
    let o = citysim(&["run", &path, "--out", blocker.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn runtime_failures_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = town();
    t["hazards"] = json!([{"id": "sabotage", "tick": 5, "kind": "generic_override",
        "target": {"id": "hosp-c"}, "overrides": {"nominal_general_capacity": {"set": -3}}}]);
    let path = scenario_file(dir.path(), &t);
    let o = citysim(&["run", &path, "--out", dir.path().join("out").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn run_writes_outputs_and_records_the_seed_source() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario_file(dir.path(), &small_town());
    let out = dir.path().join("file");
    let o = citysim(&["run", &path, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!((m["seed"].as_u64(), m["seed_source"].as_str()), (Some(11), Some("file")));
    assert_eq!(m["variants"], json!(["baseline", "risk"]));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(m["config_sha256"].as_str().unwrap(), citysim::export::sha256_hex(text.as_bytes()));

    let out = dir.path().join("env");
    let o = citysim(&["run", &path, "--out", out.to_str().unwrap()], &[("CITYSIM_SEED", "77")]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("CITYSIM_SEED"));
    let m = manifest(&out);
    assert_eq!((m["seed"].as_u64(), m["seed_source"].as_str()), (Some(77), Some("env")));

    let out = dir.path().join("flag");
    let o = citysim(
        &["run", &path, "--seed", "5", "--out", out.to_str().unwrap()],
        &[("CITYSIM_SEED", "77")],
    );
    assert_eq!(code(&o), 0);
    let m = manifest(&out);
    assert_eq!((m["seed"].as_u64(), m["seed_source"].as_str()), (Some(5), Some("flag")));

    let o = citysim(&["run", &path, "--out", out.to_str().unwrap()], &[("CITYSIM_SEED", "many")]);
    assert_ne!(code(&o), 0);
}

#[test]
fn compare_runs_every_variant() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario_file(dir.path(), &small_town());
    let out = dir.path().join("all");
    let o = citysim(&["compare", &path, "--all", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&out)["variants"], json!(["baseline", "risk", "cybersecurity"]));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("cybersecurity vs risk"), "{stdout}");
}

#[test]
fn oracles_run_from_the_command_line() {
    for which in ["sir", "attack"] {
        let o = citysim(&["oracle", which], &[]);
        assert_eq!(code(&o), 0, "{which}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stdout.is_empty());
    }
}
