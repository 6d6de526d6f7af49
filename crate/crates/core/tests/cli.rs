use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reinsure-dp"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--threads", "1"])
        .args(extra)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn edited(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(configs().join(name)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    path
}

#[test]
fn solve_finite_writes_outputs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("unconstrained.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("solve-finite", &cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run("solve-finite", &cfg, &b, &[]).status.code(), Some(0));
    for name in ["values.csv", "policy.csv"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
    let values = read(&a, "values.csv");
    assert!(values.starts_with("stage,x,J\n"));
    assert_eq!(values.lines().count(), 1 + 6 * 128);
    assert!(read(&a, "policy.csv").starts_with("stage,x,family,params\n"));
    let manifest: Value = serde_json::from_str(&read(&a, "manifest.json")).unwrap();
    assert_eq!(manifest["subcommand"], "solve-finite");
    assert_eq!(manifest["threads"], 1);
}

#[test]
fn evaluate_policy_accepts_a_solved_policy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("unconstrained.json");
    let solved = dir.path().join("solved");
    assert_eq!(run("solve-finite", &cfg, &solved, &[]).status.code(), Some(0));
    let eval = dir.path().join("eval");
    let policy = solved.join("policy.csv");
    let out = run("evaluate-policy", &cfg, &eval, &["--policy", policy.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let parse = |s: String| -> Vec<f64> {
        s.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect()
    };
    let optimal = parse(read(&solved, "values.csv"));
    let evaluated = parse(read(&eval, "values.csv"));
    for (a, b) in optimal.iter().zip(&evaluated) {
        assert!((a - b).abs() < 1e-9);
    }
    let identity = dir.path().join("identity");
    assert_eq!(run("evaluate-policy", &cfg, &identity, &[]).status.code(), Some(0));
    for (a, b) in optimal.iter().zip(parse(read(&identity, "values.csv"))) {
        assert!(*a <= b + 1e-9);
    }
}

#[test]
fn oracle_compare_and_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("unconstrained.json");
    let out = run("oracle-compare", &cfg, &dir.path().join("oracle"), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("max gap"));
    assert!(read(&dir.path().join("oracle"), "oracle_gap.csv").starts_with("stage,x,oracle,dp,gap\n"));

    let small = edited(dir.path(), "var_layer.json", |v| {
        v["grid"]["count"] = 64.into();
        v["simulation"]["paths"] = 2000.into();
    });
    let (a, b) = (dir.path().join("sa"), dir.path().join("sb"));
    assert_eq!(run("simulate", &small, &a, &["--seed", "3"]).status.code(), Some(0));
    assert_eq!(run("simulate", &small, &b, &["--seed", "3"]).status.code(), Some(0));
    assert_eq!(read(&a, "sim.json"), read(&b, "sim.json"));
    let sim: Value = serde_json::from_str(&read(&a, "sim.json")).unwrap();
    assert_eq!(sim["result"]["paths"], 2000);
    assert!(sim["ruin_bound"]["bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_infinite_reports_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), "unconstrained_infinite.json", |v| {
        v["grid"]["count"] = 32.into();
        v["tolerance"] = 1e-2.into();
    });
    let out = dir.path().join("out");
    assert_eq!(run("solve-infinite", &cfg, &out, &[]).status.code(), Some(0));
    let manifest: Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert!(manifest["details"]["certificate"].as_f64().unwrap() <= 1e-2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(bin().output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(run("solve-finite", &dir.path().join("missing.json"), &out, &[]).status.code(), Some(1));

    let bad = edited(dir.path(), "unconstrained_infinite.json", |v| {
        v["stage"]["risk"] = serde_json::json!({"kind": "value-at-risk", "alpha": 0.9});
    });
    let o = run("solve-infinite", &bad, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coherence"));

    let short = edited(dir.path(), "unconstrained.json", |v| {
        v["horizon"] = "infinite".into();
        v["grid"]["count"] = 32.into();
        v["max_iterations"] = 2.into();
    });
    assert_eq!(run("solve-infinite", &short, &out, &[]).status.code(), Some(2));
    assert!(!out.join("manifest.json").exists());
}
