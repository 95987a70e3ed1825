use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ietpwi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ietpwi")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success() || o.status.code() == Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).expect("valid json")
}

#[test]
fn induct_writes_header_and_steps() {
    let o = ietpwi(&["induct", "--perm", "2 1", "--lambda", "0.618034,0.381966", "--steps", "10"]);
    assert!(o.status.success());
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0]["n"], 0);
    assert_eq!(lines[0]["cocycle"], serde_json::json!([[1, 0], [0, 1]]));
    // Golden lengths alternate types.
    let types: Vec<i64> = lines[1..].iter().map(|l| l["type"].as_i64().unwrap()).collect();
    assert!(types.windows(2).all(|w| w[0] != w[1]));
    let b: Vec<Vec<i64>> = serde_json::from_value(lines[10]["cocycle"].clone()).unwrap();
    assert_eq!((b[0][0] * b[1][1] - b[0][1] * b[1][0]).abs(), 1);
    assert_eq!(b.iter().flatten().max(), Some(&89));
}

#[test]
fn induct_zero_steps_is_header_only() {
    let o = ietpwi(&["induct", "--perm", "3 2 1", "--lambda", "0.2,0.3,0.5", "--steps", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn induct_tie_fails_after_partial_output() {
    let o = ietpwi(&["induct", "--perm", "2 1", "--lambda", "0.25,0.75", "--steps", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("undefined"));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn rauzy_graph_four_letters() {
    let o = ietpwi(&["rauzy-graph", "--perm", "4 3 2 1"]);
    assert!(o.status.success());
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph"));
    let vertices = dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count();
    assert_eq!(vertices, 7);
}

#[test]
fn lyapunov_two_letters_is_symmetric() {
    let o = ietpwi(&["--json", "lyapunov", "--perm", "2 1", "--random-lambda", "--steps", "20000", "--seed", "5"]);
    let v = json(&o);
    let e: Vec<f64> = v["exponents"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(e.len(), 2);
    assert!((e[0] + e[1]).abs() < 1e-2, "{e:?}");
    assert!(e[0] > 0.8 && e[0] < 1.25, "{e:?}");
}

#[test]
fn zero_rotation_verifies() {
    let o = ietpwi(&["--json", "verify", "--preset", "symmetric4", "--theta", "0,0,0,0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["all_pass"], true);
}

#[test]
fn sampled_rotation_verifies() {
    let o = ietpwi(&["verify", "--preset", "symmetric4", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn random_rotation_fails_verification() {
    let o = ietpwi(&["--json", "verify", "--preset", "symmetric4", "--random-theta", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["all_pass"], false);
}

#[test]
fn curve_writes_svg_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("c.svg");
    let csv = dir.path().join("c.csv");
    let o = ietpwi(&[
        "curve",
        "--preset",
        "symmetric4",
        "--levels",
        "12",
        "--show-levels",
        "4",
        "--svg",
        svg.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let s = std::fs::read_to_string(&svg).unwrap();
    assert!(s.starts_with("<svg") && s.matches("<polyline").count() == 2);
    let c = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(c.lines().next(), Some("level,x,re,im"));
    for level in ["4,", "12,"] {
        assert!(c.lines().any(|l| l.starts_with(level)));
    }
}

#[test]
fn pwi_itinerary_matches_iet() {
    let o = ietpwi(&["--json", "pwi", "--preset", "symmetric4", "--iterations", "40", "--seed", "3"]);
    let v = json(&o);
    assert_eq!(v["itinerary"].as_str().unwrap().len(), 40);
    assert_eq!(v["itinerary"], v["iet_itinerary"]);
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(&cfg, r#"{"perm": "2 1", "lambda": [0.618034, 0.381966], "steps": 4}"#);
    let o = ietpwi(&["--config", cfg.to_str().unwrap(), "induct"]);
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = ietpwi(&["--config", cfg.to_str().unwrap(), "induct", "--steps", "2"]);
    assert_eq!(stdout(&o).lines().count(), 3);

    write(&cfg, r#"{"perm": "2 1", "bogus": 1}"#);
    assert_eq!(ietpwi(&["--config", cfg.to_str().unwrap(), "induct"]).status.code(), Some(2));
}

#[test]
fn seed_reproducible() {
    let run = |seed: &str| stdout(&ietpwi(&["--json", "sample-theta", "--preset", "symmetric4", "--seed", seed]));
    assert_eq!(run("7"), run("7"));
    assert_ne!(run("7"), run("8"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.json");
    let o = ietpwi(&[
        "zorich",
        "--perm",
        "3 2 1",
        "--lambda",
        "0.2,0.33,0.47",
        "--steps",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["zorich_steps"], 3);
}
