use std::path::Path;
use std::process::{Command, Output};

const SPHERE: &str = r#"{"metric": {"kind": "model", "model": {"model": "sphere"}}, "target": [0.99, 1.01], "sampling": {"random_points": 10}}"#;

fn warpcurv(dir: &Path, args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_warpcurv"));
    cmd.current_dir(dir).args(args).env_remove("WARPCURV_OUT");
    if let Some(p) = env_out {
        cmd.env("WARPCURV_OUT", p);
    }
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn pass_writes_report_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.json", SPHERE);
    let out = warpcurv(tmp.path(), &["curvature-sweep", "--config", &cfg, "--out", "o"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("o/report.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "curvature-sweep");
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["seed"], 0);
    assert!(report["timestamp"].as_u64().unwrap() > 0);
    assert_eq!(report["config_echo"]["sampling"]["random_points"], 10);
    let csv = std::fs::read_to_string(tmp.path().join("o/curvature.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# warpcurv curvature-sweep curvature.csv schema v1"));
    assert_eq!(lines.next(), Some("parameter,t,series,index,value"));
}

#[test]
fn failing_verdict_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.json", &SPHERE.replace("[0.99, 1.01]", "[-1.1, -0.9]"));
    let out = warpcurv(tmp.path(), &["curvature-sweep", "--config", &cfg, "--out", "o"], None);
    assert_eq!(out.status.code(), Some(2));
    let report = std::fs::read_to_string(tmp.path().join("o/report.json")).unwrap();
    assert!(report.contains("\"verdict\": \"fail\""));
}

#[test]
fn errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write(tmp.path(), "u.json", &SPHERE.replace("\"target\"", "\"colour\": 1, \"target\""));
    let bad_r = write(
        tmp.path(),
        "r.json",
        r#"{"family": {"kind": "rho_r", "r": -1.0, "factor": {"model": "circle"}}, "epsilon": 0.1}"#,
    );
    for (cmd, cfg) in [("curvature-sweep", unknown.as_str()), ("family-check", bad_r.as_str()), ("heatflow", "missing.json")] {
        let out = warpcurv(tmp.path(), &[cmd, "--config", cfg, "--out", "o"], None);
        assert_eq!(out.status.code(), Some(1), "{cmd} {cfg}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let out = warpcurv(tmp.path(), &["no-such-command", "--config", &unknown], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.json", SPHERE);
    let env_dir = tmp.path().join("from-env");
    assert_eq!(warpcurv(tmp.path(), &["curvature-sweep", "--config", &cfg], Some(&env_dir)).status.code(), Some(0));
    assert!(env_dir.join("report.json").exists());
    // --out wins over the environment
    assert_eq!(warpcurv(tmp.path(), &["curvature-sweep", "--config", &cfg, "--out", "flag"], Some(&env_dir)).status.code(), Some(0));
    assert!(tmp.path().join("flag/report.json").exists());
    assert_eq!(warpcurv(tmp.path(), &["curvature-sweep", "--config", &cfg], None).status.code(), Some(0));
    assert!(tmp.path().join("warpcurv-out/report.json").exists());
}

#[test]
fn seed_override_changes_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.json", SPHERE);
    warpcurv(tmp.path(), &["curvature-sweep", "--config", &cfg, "--out", "a", "--seed", "1"], None);
    warpcurv(tmp.path(), &["curvature-sweep", "--config", &cfg, "--out", "b", "--seed", "2"], None);
    let read = |d: &str| std::fs::read_to_string(tmp.path().join(d).join("curvature.csv")).unwrap();
    assert_ne!(read("a"), read("b"));
    let report = std::fs::read_to_string(tmp.path().join("a/report.json")).unwrap();
    assert!(report.contains("\"seed\": 1"));
}
