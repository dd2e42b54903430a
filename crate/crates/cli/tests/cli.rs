use std::path::Path;
use std::process::{Command, Output};

fn smoothnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smoothnn"))
        .args(args)
        .output()
        .unwrap()
}

const RUN: &str = r#"
name = "cli"
T = 300
trials = 3
seed = 4
output = "out"
[space]
shape = "box"
lo = 0.0
hi = 1.0
dim = 2
[concept]
kind = "disk"
center = [0.5, 0.5]
radius = 0.25
[adversary]
kind = "sigma_smooth_ball_boost"
sigma = 0.05
[cover]
radii = [0.2, 0.1]
[dimension]
[worstcase]
pairs = 10
"#;

fn write(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), RUN);
    let out = smoothnn(&["run", &cfg]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "average_loss.csv",
        "mistakes.csv",
        "trials.csv",
        "average_loss.svg",
        "mistakes.svg",
        "result.json",
    ] {
        assert!(dir.path().join("out").join(f).is_file(), "{f}");
    }
    let out = smoothnn(&["report", dir.path().join("out").to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("cli"));
}

#[test]
fn geometry_subcommands_print_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), RUN);
    for cmd in ["cover", "dim", "worstcase"] {
        let out = smoothnn(&[cmd, &cfg]);
        assert!(
            out.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(v.is_object(), "{cmd}");
    }
}

#[test]
fn bad_config_reports_a_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), &RUN.replace("sigma = 0.05", "sigma = -1.0"));
    let out = smoothnn(&["run", &cfg]);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"], "config");
    assert!(v["message"].as_str().unwrap().contains("adversary"));
    let out = smoothnn(&["run", dir.path().join("missing.toml").to_str().unwrap()]);
    assert!(!out.status.success());
}
