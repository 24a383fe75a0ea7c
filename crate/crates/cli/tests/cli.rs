use std::path::Path;
use std::process::{Command, Output};

fn perclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perclab")).args(args).env_remove("PERCLAB_WORKERS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

const HEADER: &str = "experiment_id,family,params,p,h,abscissa,estimate,ci_low,ci_high,envelope_low,envelope_high,censored_frac,bound_rhs,bound_tag,trials,budget,seed";

#[test]
fn verify_oracle_prints_summary() {
    let o = perclab(&["verify", "oracle"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["checks_failed"], 0);
    assert!(v["checks_passed"].as_u64().unwrap() > 100);
}

#[test]
fn corrupted_golden_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(perclab_core::oracle::DEFAULT_GOLDEN).unwrap();
    let recs = v["records"].as_array_mut().unwrap();
    recs.truncate(3);
    let bad_id = recs[1]["id"].as_str().unwrap().to_owned();
    let x = recs[1]["expected"].as_f64().unwrap();
    recs[1]["expected"] = (x + 0.01).into();
    let path = dir.path().join("g.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let o = perclab(&["verify", "oracle", "--golden", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["checks_failed"], 1);
    assert_eq!(s["failed"][0], bad_id.as_str());

    std::fs::write(&path, r#"{"version":1,"records":[]}"#).unwrap();
    assert_eq!(code(&perclab(&["verify", "oracle", "--golden", path.to_str().unwrap()])), 1);
}

#[test]
fn two_arm_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let args = [
        "estimate", "two-arm", "--family", "tree", "--degree", "4", "--p", "0.3333", "--n", "4,16,64", "--trials", "2000",
        "--budget", "20000", "--seed", "7", "--out", out.to_str().unwrap(),
    ];
    assert_eq!(code(&perclab(&args)), 0);
    let first = read(&out);
    let lines: Vec<&str> = first.lines().collect();
    assert!(lines[0].starts_with("# perclab ") && lines[0].contains("\"seed\":7"));
    assert_eq!(lines[1], HEADER);
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("two-arm,tree,degree=4,0.3333,,4.0,"));
    assert!(lines[2].contains(",two_arm,2000,20000,7"));
    assert_eq!(code(&perclab(&args)), 0);
    assert_eq!(read(&out), first);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"family":"tree","degree":3,"p":0.4,"n":[2,8],"trials":500,"seed":3}"#).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(code(&perclab(&["estimate", "tail", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()])), 0);
    let o = perclab(&["estimate", "tail", "--config", cfg.to_str().unwrap(), "--p", "0.3", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let (a, b) = (read(&a), read(&b));
    assert!(a.lines().nth(2).unwrap().contains(",0.4,"));
    assert!(b.lines().nth(2).unwrap().contains(",0.3,"));
    assert!(b.contains(",tail_raw,"));
}

#[test]
fn json_format() {
    let o = perclab(&["estimate", "martingale", "--family", "hypercubic", "--d", "2", "--p", "0.5", "--horizon", "8", "--trials", "200", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"][0]["horizon"], 8);
    assert_eq!(v["config"]["seed"], 0);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&perclab(&["estimate", "tail", "--family", "tree", "--p", "0.5", "--n", "4"])), 1);
    assert_eq!(code(&perclab(&["estimate", "tail", "--family", "tree", "--degree", "3", "--p", "1.5", "--n", "4"])), 1);
    assert_eq!(code(&perclab(&["estimate", "tail", "--family", "tree", "--degree", "3", "--p", "0.5"])), 1);
    assert_eq!(code(&perclab(&["nonsense"])), 1);
    let o = perclab(&["estimate", "tail", "--family", "tree", "--degree", "3", "--p", "0.5", "--n", "4", "--trials", "10", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(code(&o), 3);
    assert_eq!(code(&perclab(&["--help"])), 0);
}

#[test]
fn experiment_runner_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("e.json");
    std::fs::write(
        &spec,
        r#"[{"id":"tree-tail","kind":"tail_vs_bound","graph":{"family":"tree","degree":3},"p":0.4,"n_grid":[4,16],"trials":500,"budget":1000},
            {"id":"z2-arm","kind":"two_arm_vs_bound","graph":{"family":"hypercubic","d":2},"p":0.5,"n_grid":[10,100],"trials":300,"budget":1000}]"#,
    )
    .unwrap();
    let o = perclab(&["experiment", "--spec", spec.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summaries: Vec<serde_json::Value> =
        String::from_utf8(o.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(summaries.len(), 2);
    assert_eq!(summaries[1]["experiment_id"], "z2-arm");
    assert_eq!(summaries[1]["checks_failed"], 0);
    let csv = read(&dir.path().join("tree-tail.csv"));
    assert_eq!(csv.lines().nth(1).unwrap(), HEADER);
    assert_eq!(csv.lines().count(), 2 + 4);
}
