use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specprof"))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("specprof-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const K2: &str = r#"{"num_vertices": 2, "edges": [[0, 1, 1.0]]}"#;

#[test]
fn tau_on_k2() {
    let k2 = scratch("k2.json", K2);
    let o = run(&["tau", "--input", k2.to_str().unwrap(), "--epsilon", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let value: f64 = stdout(&o).trim().parse().unwrap();
    assert!((value - std::f64::consts::LN_2 / 2.0).abs() < 1e-11);
}

#[test]
fn disconnected_input_is_an_input_error() {
    let g = scratch("dis.json", r#"{"num_vertices": 4, "edges": [[0, 1, 1.0], [2, 3, 1.0]]}"#);
    let o = run(&["tau", "--input", g.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Disconnected"));
}

#[test]
fn malformed_input_and_unknown_flags() {
    let g = scratch("bad.json", r#"{"num_vertices": 2, "edges": [[0, 1]]}"#);
    let o = run(&["stationary", "--input", g.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("BadInputFile"));
    assert_eq!(run(&["tau", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_gmt_default_suite_csv() {
    let o = run(&["verify-gmt", "--suite", "default"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("label,n,pi_star,tau,rho,slack"));
    assert_eq!(lines.count(), 48);
    assert!(text.contains("K2,2,0.5,0.34657359028,1.38629436112,4\n"));
}

#[test]
fn reports_are_reproducible() {
    let a = run(&["simulate", "--k", "3", "--replicas", "2000", "--seed", "9", "--format", "json"]);
    let b = run(&["simulate", "--k", "3", "--replicas", "2000", "--seed", "9", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 9);
    assert_eq!(v["mode"]["discrete"]["steps"], 16);
}

#[test]
fn construct_writes_loadable_graph() {
    let out = scratch("g3.json", "");
    let o = run(&["construct", "--k", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = run(&["stationary", "--input", out.to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&s.stdout).unwrap();
    assert_eq!(v["num_vertices"], 512);
    assert!((v["pi_star"].as_f64().unwrap() - 1.0 / 512.0).abs() < 1e-14);
    assert_eq!(run(&["construct", "--k", "4"]).status.code(), Some(2));
}

#[test]
fn rho_and_profile_formats() {
    let k2 = scratch("k2b.json", K2);
    let p = k2.to_str().unwrap();
    let r = run(&["rho", "--input", p, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["rho"].as_f64().unwrap(), 1.38629436112);
    let c = run(&["profile", "--input", p, "--format", "csv"]);
    assert!(stdout(&c).starts_with("r_from,r_to,lambda,set\n"));
    let t = run(&["tau-from", "--input", p, "--start", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&t.stdout).unwrap();
    assert_eq!(v["start"], 1);
}

#[test]
fn rough_iso_exit_codes() {
    let path5 = scratch(
        "p5.json",
        r#"{"num_vertices": 5, "edges": [[0,1,1.0],[1,2,1.0],[2,3,1.0],[3,4,1.0]]}"#,
    );
    let point = scratch("pt.json", r#"{"num_vertices": 1, "edges": [[0, 0, 1.0]]}"#);
    let map = scratch("map.json", "[0, 0, 0, 0, 0]");
    let args = |k: &'static str| {
        vec![
            "rough-iso".to_string(),
            "--input".into(),
            path5.to_str().unwrap().into(),
            "--target".into(),
            point.to_str().unwrap().into(),
            "--map".into(),
            map.to_str().unwrap().into(),
            "--K".into(),
            k.into(),
        ]
    };
    let ok = bin().args(args("2")).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = bin().args(args("1")).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(v["witness"]["a"], 0);
    assert_eq!(v["witness"]["b"], 4);
}
