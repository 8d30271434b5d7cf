use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

const SE_CONFIG: &str = r#"
[instance]
arms = 3
gap = 2.0
b = 0.75
sigma = 1.0

[policy]
name = "se"

[run]
T = 2000
replications = 3
seed = 11
record_every = 50
"#;

fn divbandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divbandit")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_traces_and_summary() {
    let dir = tempdir().unwrap();
    let cfg = write(dir.path(), "se.toml", SE_CONFIG);
    let out = dir.path().join("out");
    let o = divbandit(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 1);
    for f in ["trace_0.csv", "trace_1.csv", "trace_2.csv", "summary.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.starts_with("replication,seed,T,cumulative_regret,suboptimal_resource,final_status"));
    let trace = fs::read_to_string(out.join("trace_0.csv")).unwrap();
    assert_eq!(
        trace.lines().next().unwrap(),
        "t,cumulative_regret,S_1,S_2,S_3,L_1,L_2,L_3,B_1,B_2,B_3,status,ci_width"
    );
    assert_eq!(trace.lines().count(), 1 + 2000 / 50);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempdir().unwrap();
    let cfg = write(dir.path(), "se.toml", SE_CONFIG);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = divbandit(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["trace_0.csv", "trace_1.csv", "trace_2.csv", "summary.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[instance]\nmeans = [1.0\n");
    let o = divbandit(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let missing = dir.path().join("nope.toml");
    let o = divbandit(&["run", "--config", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn incompatible_policy_exits_2() {
    let dir = tempdir().unwrap();
    let text = SE_CONFIG.replace("b = 0.75", "b = 0.25").replace("name = \"se\"", "name = \"eps-greedy\"\neps = 0.1");
    let cfg = write(dir.path(), "eg.toml", &text);
    let o = divbandit(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_exits_2() {
    let o = divbandit(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempdir().unwrap();
    let cfg = write(dir.path(), "se.toml", &SE_CONFIG.replace("T = 2000", "T = 300"));
    let out = dir.path().join("sweep");
    let o = divbandit(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--axis", "K", "--values", "2,4,8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let o = divbandit(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--axis", "K", "--values", "4,2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_concentration_reports_t2_without_failing() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("vc");
    let o = divbandit(&["verify-concentration", "--t", "2..60", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("t = [2]"));
    let csv = fs::read_to_string(out.join("spectral.csv")).unwrap();
    assert_eq!(csv.lines().count(), 60);
    assert!(csv.lines().nth(1).unwrap().ends_with("false"));
    assert!(csv.lines().skip(2).all(|l| l.ends_with("true")));
}

#[test]
fn verify_concentration_tail() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("vc");
    let o = divbandit(&[
        "verify-concentration",
        "--t",
        "3",
        "--tail-t",
        "6",
        "--trials",
        "2000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("tail.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,epsilon,sigma,trials,empirical_freq,bound_freq,pass");
    assert!(csv.lines().nth(1).unwrap().starts_with("6,"));
}

#[test]
fn verify_lemma1_full_grid() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("l1");
    let o = divbandit(&["verify-lemma1", "--max-k", "4", "--max-t", "16", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 violations"));
    let csv = fs::read_to_string(out.join("lemma1.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "K,T,b,max_lhs,rhs,slack");
    assert_eq!(csv.lines().count(), 1 + 3 * 15 * 4);
    let o = divbandit(&["verify-lemma1", "--max-k", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimate_b_from_burn_in() {
    let dir = tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "b.toml",
        "[instance]\nmeans = [1.0, 0.5]\nb = 0.75\nsigma = 0.1\n\n[burn_in]\nrepeats = 50\nseed = 2\n",
    );
    let out = dir.path().join("b");
    let o = divbandit(&["estimate-b", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("b_estimate.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let b_hat: f64 = row[1].parse().unwrap();
    assert!((b_hat - 0.75).abs() < 0.05, "{b_hat}");
    let zero = write(dir.path(), "z.toml", "[instance]\nmeans = [1.0, 0.5]\nb = 0.75\nsigma = 0.1\nnoise = \"zero\"\n");
    let o = divbandit(&["estimate-b", "--config", &zero, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
