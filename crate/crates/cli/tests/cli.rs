use std::path::Path;
use std::process::{Command, Output};

fn brm(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_brm"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "brm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn tiny_config(dir: &Path) -> String {
    let text = String::from_utf8(brm(&["preset", "tabular-eval"]).stdout).unwrap();
    let text = text
        .replace("trajectory_len = 1000000", "trajectory_len = 5000")
        .replace("eval_every = 1000", "eval_every = 20")
        .replace("samples = 50000", "samples = 2000");
    let path = dir.join("tiny.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn shipped_configs_match_the_presets() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in [
        "tabular-eval",
        "tabular-ctrl",
        "ring-eval",
        "ring-ctrl",
        "cartpole",
    ] {
        let shipped = std::fs::read_to_string(root.join(format!("{name}.toml"))).unwrap();
        let printed = String::from_utf8(brm(&["preset", name]).stdout).unwrap();
        assert_eq!(shipped, printed, "{name}");
    }
}

#[test]
fn run_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    brm(&["run", &cfg, "--updates", "40", "--out", a.to_str().unwrap()]);
    brm(&["run", &cfg, "--updates", "40", "--out", b.to_str().unwrap()]);
    for f in [
        "summary.json",
        "curves/bff.csv",
        "curves/5bff.csv",
        "checkpoints/us-0.ckpt",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let csv = std::fs::read_to_string(a.join("curves/sc.csv")).unwrap();
    assert!(csv.starts_with("update,seed,metric,value\n0,0,relative_error,"));

    let single = dir.path().join("single");
    brm(&[
        "run",
        &cfg,
        "--updates",
        "40",
        "--seed",
        "9",
        "--out",
        single.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(single.join("curves/us.csv")).unwrap();
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("9")));

    let out = brm(&["compare", a.to_str().unwrap()]);
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("\"median_auc\""));
}

#[test]
fn oracle_and_probe_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("o");
    brm(&["oracle", &cfg, "--out", out.to_str().unwrap()]);
    assert!(out.join("oracle.ckpt").exists());
    brm(&["probe", &cfg, "--out", out.to_str().unwrap()]);
    let probe = std::fs::read_to_string(out.join("probe.json")).unwrap();
    assert!(probe.contains("\"fixed-point\""));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_brm"))
        .args(["run", "no-such-preset"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-preset"));
    let out = Command::new(env!("CARGO_BIN_EXE_brm"))
        .args(["compare"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
