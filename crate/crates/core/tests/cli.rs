use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_delta-dyn"));
    cmd.args(args).env_remove("DELTA_DYN_THREADS");
    if let Some(t) = threads {
        cmd.env("DELTA_DYN_THREADS", t);
    }
    cmd.output().unwrap()
}

fn run(scenario: &str, out: &Path) -> Output {
    cli(&["run", scenario, "--out", out.to_str().unwrap()], Some("1"))
}

#[test]
fn certified_scenario_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("identity-capped-ufb", dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("identity-capped-ufb.json").exists());
}

#[test]
fn refuted_scenario_writes_failing_times() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("rotation-not-delta-tm", dir.path());
    assert_eq!(out.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.path().join("rotation-not-delta-tm.failing_n.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7001);
}

#[test]
fn malformed_scenario_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"bad\"\ncheck = \"nope\"\n").unwrap();
    let out = run(path.to_str().unwrap(), dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn list_shows_bundled_scenarios() {
    let out = cli(&["list"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).lines().count() >= 10);
}

#[test]
fn replay_matches_and_detects_edits() {
    let dir = tempfile::tempdir().unwrap();
    run("rotation-half-delta-tm", dir.path());
    let cert = dir.path().join("rotation-half-delta-tm.json");
    let out = cli(&["replay", cert.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));

    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    json["verdict"]["status"] = "refuted".into();
    std::fs::write(&cert, serde_json::to_string(&json).unwrap()).unwrap();
    let out = cli(&["replay", cert.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_count_from_environment() {
    assert_eq!(cli(&["list"], Some("2")).status.code(), Some(0));
    assert_eq!(cli(&["list"], Some("abc")).status.code(), Some(3));
    assert_eq!(cli(&["list"], Some("0")).status.code(), Some(3));
}
