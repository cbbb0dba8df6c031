use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(dir: &Path, json: &str, args: &[&str]) -> (Output, PathBuf) {
    let config = dir.join("config.json");
    std::fs::write(&config, json).unwrap();
    let out = dir.join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_fppflow"))
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(args)
        .env_remove("FPPFLOW_WORKERS")
        .output()
        .unwrap();
    (output, out)
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

const BERNOULLI: &str = r#""distribution": {"kind": "bernoulli", "p": "9/10", "lo": 0, "hi": 1}"#;

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fppflow"))
        .args(["--config", "/nonexistent/fppflow.json", "nu"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn schema_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run(dir.path(), r#"{"seed": 1, "sampels": 5}"#, &["psi"]);
    assert_eq!(o.status.code(), Some(2));
    let (o, _) = run(dir.path(), r#"{"seed": 1, "n": 2}"#, &["nu"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let (o, _) = run(dir.path(), r#"{"distribution": {"kind": "uniform", "a": 0, "b": 1}, "n": 2, "replications": 3}"#, &["nu"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn enumeration_over_budget_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let json = format!(r#"{{"seed": 1, {BERNOULLI}, "dims": [4], "height": 4, "lambdas": [1], "budget": 1000}}"#);
    let (o, _) = run(dir.path(), &json, &["oracle"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn oracle_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let json = format!(r#"{{"seed": 1, {BERNOULLI}, "d": 2, "n": 2, "h": 2, "lambdas": [1]}}"#);
    let (o, out) = run(dir.path(), &json, &["oracle"]);
    assert!(o.status.success());
    let t = rows(&out.join("oracle.csv"));
    assert_eq!(t[1][4], "6561/10000");
}

#[test]
fn psi_above_the_supremum_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let json = format!(r#"{{"seed": 4, {BERNOULLI}, "n": 2, "h": 2, "lambdas": ["1/2", "3/2"], "samples": 200}}"#);
    let (o, out) = run(dir.path(), &json, &["psi"]);
    assert!(o.status.success());
    let t = rows(&out.join("psi.csv"));
    assert_eq!(t[0][12], "infinite_flag");
    assert_eq!(t[2][0], "3/2");
    assert_eq!(t[2][6], "0");
    assert_eq!(t[2][12], "1");
    assert_eq!(t[2][10], "inf");
    assert!(out.join("psi.json").exists());
}

#[test]
fn constant_law_nu_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"seed": 5, "distribution": {"kind": "finite_discrete", "atoms": [{"value": 2.5, "prob": 1}]},
                   "n": [2, 3], "replications": 4}"#;
    let (o, out) = run(dir.path(), json, &["nu"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = rows(&out.join("nu.csv"));
    assert_eq!(t.len(), 3);
    for r in &t[1..] {
        assert_eq!(r[8], "5/2");
        assert_eq!(r[10], "0.00000000000e0");
    }
}

#[test]
fn verify_passes_and_seed_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"seed": 1, "verify": {"duality": 20, "menger": 20, "subadditivity": 20, "superadditivity": 20, "sandwich": 20, "junction": 10}}"#;
    let (o, out) = run(dir.path(), json, &["--seed", "99", "verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = rows(&out.join("verify.csv"));
    assert_eq!(t.len(), 8);
    assert!(t[1..].iter().all(|r| r[2] == "0"));
    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(sidecar["seed"], 99);
}

#[test]
fn outputs_do_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let json = format!(r#"{{"seed": 8, {BERNOULLI}, "n": 3, "h": 3, "lambdas": ["1/3", "2/3", 1], "samples": 500, "replications": 10}}"#);
    let mut seen = Vec::new();
    for workers in ["1", "2", "5"] {
        for cmd in ["psi", "nu", "flow", "tau"] {
            let json = json.replace("\"n\": 3", "\"n\": 3, \"k_slab\": 2");
            let (o, out) = run(dir.path(), &json, &["--workers", workers, cmd]);
            assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
            seen.push((cmd, workers, std::fs::read(out.join(format!("{cmd}.csv"))).unwrap()));
        }
    }
    for (cmd, w, bytes) in &seen {
        let first = seen.iter().find(|(c, _, _)| c == cmd).unwrap();
        assert_eq!(bytes, &first.2, "{cmd} with {w} workers");
    }
}

#[test]
fn report_merges_disjoint_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for seed in [1, 2] {
        let sub = dir.path().join(format!("run{seed}"));
        std::fs::create_dir_all(&sub).unwrap();
        let json = format!(r#"{{"seed": {seed}, {BERNOULLI}, "n": 2, "h": 2, "lambdas": [1], "samples": 300}}"#);
        let (o, out) = run(&sub, &json, &["psi"]);
        assert!(o.status.success());
        files.push(out.join("psi.csv"));
    }
    let hits: u64 = files.iter().map(|f| rows(f)[1][6].parse::<u64>().unwrap()).sum();
    let (o, out) = run(dir.path(), "{}", &["report", files[0].to_str().unwrap(), files[1].to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = rows(&out.join("report.csv"));
    assert_eq!(t[1][5], "600");
    assert_eq!(t[1][6], hits.to_string());
    assert_eq!(t[1][7], "1");
}

#[test]
fn report_rejects_foreign_tables() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("x.csv");
    std::fs::write(&bogus, "a,b\n1,2\n").unwrap();
    let (o, _) = run(dir.path(), "{}", &["report", bogus.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
