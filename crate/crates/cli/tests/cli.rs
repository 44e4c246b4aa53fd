use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const ID3_L1: &str = r#"{"domains":[{"weights":[1,1,1],"kind":{"type":"weighted_ls","s":1}}],
"codomain":{"weights":[1,1,1],"kind":{"type":"weighted_ls","s":1}},"tensor":[1,0,0,0,1,0,0,0,1]}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sconcave"));
    c.env_remove("SCONCAVE_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sconcave-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn unknown_flag_exits_2() {
    let out = run(&["gallery", "--scenario", "block_space", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_subcommand_exits_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn block_space_reports_fourth_root_of_four() {
    let out = run(&["gallery", "--scenario", "block_space", "--K", "4", "--p", "2", "--q", "4", "--trials", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["passed"], true);
    let y = r["values"]["norm_Y_of_one"].as_f64().unwrap();
    assert!((y - 4f64.powf(0.25)).abs() < 1e-12);
    let rf = r["values"]["norm_Rf_of_one"].as_f64().unwrap();
    assert!((rf - (1.0 - 0.0625f64).powf(0.25)).abs() < 1e-12);
}

#[test]
fn fit_on_l1_identity_gives_constant_one_and_round_trips() {
    let op = scratch("id3.json");
    fs::write(&op, ID3_L1).unwrap();
    let cert = scratch("cert.json");
    let op_s = op.to_str().unwrap();
    let cert_s = cert.to_str().unwrap();
    let out = run(&["fit", "--operator", op_s, "--candidates", "basis,uniform", "--p", "1", "--q", "1", "--certificate-out", cert_s]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c = report(&out)["values"]["C"].as_f64().unwrap();
    assert!((c - 1.0).abs() <= 1e-6, "C = {c}");

    let v = run(&["verify", "--operator", op_s, "--certificate", cert_s]);
    assert_eq!(v.status.code(), Some(0));
    let f = run(&["factorize", "--operator", op_s, "--certificate", cert_s]);
    assert_eq!(f.status.code(), Some(0));
    assert_eq!(report(&f)["checks"][0]["passed"], true);

    // shrinking C breaks the bound
    let mut json: Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    json["C"] = Value::from(0.5);
    let small = scratch("small.json");
    fs::write(&small, json.to_string()).unwrap();
    let bad = run(&["verify", "--operator", op_s, "--certificate", small.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn same_seed_gives_identical_reports() {
    let args = ["--seed", "11", "gallery", "--scenario", "integral_evaluation", "--depth", "5", "--n", "3", "--trials", "20"];
    let a = without_timing(report(&run(&args)));
    let b = without_timing(report(&run(&args)));
    assert_eq!(a, b);
    assert_eq!(a["inputs"]["seed"], 11);
}

#[test]
fn seed_defaults_from_environment() {
    let out = bin().args(["gallery", "--scenario", "identity_concave", "--trials", "5"]).env("SCONCAVE_SEED", "9").output().unwrap();
    assert_eq!(report(&out)["inputs"]["seed"], 9);
}

#[test]
fn bad_config_exits_2() {
    let cfg = scratch("bad.json");
    fs::write(&cfg, r#"{"scenario":"block_space","p":3,"q":2}"#).unwrap();
    assert_eq!(run(&["report", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    fs::write(&cfg, r#"{"scenario":"block_space","trials":0}"#).unwrap();
    assert_eq!(run(&["report", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["report", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
}

#[test]
fn config_runs_scenario_and_writes_csv() {
    let cfg = scratch("cfg.json");
    let csv = scratch("checks.csv");
    let out = scratch("report.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"seed":3,"scenario":"identity_concave","dim":3,"n":3,"trials":10,"out":{:?},"csv":{:?}}}"#,
            out.to_str().unwrap(),
            csv.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = run(&["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["inputs"]["seed"], 3);
    assert_eq!(r["passed"], true);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("check,trials,violations,worst,tolerance,passed"));
}

#[test]
fn custom_config_forwards_arguments() {
    let op = scratch("id3c.json");
    fs::write(&op, ID3_L1).unwrap();
    let cfg = scratch("custom.json");
    let args = serde_json::json!({
        "scenario": "custom",
        "args": ["fit", "--operator", op.to_str().unwrap(), "--candidates", "basis,uniform", "--p", "1", "--q", "1"]
    });
    fs::write(&cfg, args.to_string()).unwrap();
    let o = run(&["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&o)["command"], "fit");
}

#[test]
fn norms_accepts_inline_json() {
    let o = run(&["norms", "--lattice", r#"{"weights":[1,1],"kind":{"type":"weighted_ls","s":1}}"#, "--family", "[[1,0],[0,1]]", "--p", "1", "--q", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&o);
    assert!((r["values"]["strong_primal"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-6);
}
