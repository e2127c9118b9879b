use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn barygap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_barygap")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn graph_embed_chub_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("k4.json");
    let pts = dir.path().join("pts.json");
    let res = dir.path().join("res.json");
    assert!(barygap(&["graph", "gen", "--family", "complete", "--n", "4", "--out", p(&g)]).status.success());
    let graph = read_json(&g);
    assert_eq!(graph["n"], 4);
    assert_eq!(graph["edges"].as_array().unwrap().len(), 6);

    assert!(barygap(&["embed", "--graph", p(&g), "--k", "3", "--p", "2", "--q", "2", "--out", p(&pts)]).status.success());
    let cfg = read_json(&pts);
    assert_eq!(cfg["d"], 48);
    assert_eq!(cfg["regime"], "Q22");

    let out = barygap(&["chub", "--points", p(&pts), "--out", p(&res), "--quiet"]);
    assert!(out.status.success());
    assert!(out.stderr.is_empty());
    let r = read_json(&res);
    // D(k-1)^2 - k + 1 = 12 - 2 for a triangle in K4.
    assert!((r["value"].as_f64().unwrap() - 10.0).abs() < 1e-9);
}

#[test]
fn infinite_q_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("c5.json");
    let pts = dir.path().join("pts.json");
    assert!(barygap(&["graph", "gen", "--family", "cycle", "--n", "5", "--out", p(&g)]).status.success());
    assert!(barygap(&["embed", "--graph", p(&g), "--k", "3", "--p", "1", "--q", "inf", "--out", p(&pts)]).status.success());
    assert_eq!(read_json(&pts)["q"], "inf");
    let out = barygap(&["chub", "--points", p(&pts), "--graph", p(&g), "--tol", "1e-7", "--json", "--quiet"]);
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["lower_bound"].as_f64().unwrap() >= 2.0 - 1e-6);
}

#[test]
fn reduce_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("p.json");
    let report = dir.path().join("report.json");
    assert!(barygap(&["graph", "gen", "--family", "petersen", "--out", p(&g)]).status.success());
    for (q, solver) in [("2", "chub"), ("inf", "mot"), ("1", "chub")] {
        let out = barygap(&["reduce", "--graph", p(&g), "--k", "3", "--p", "1", "--q", q, "--solver", solver, "--report", p(&report), "--quiet"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let r = read_json(&report);
        assert_eq!(r["decision"]["has_clique"], false);
        assert_eq!(r["agrees"], true);
        assert!(r["timings"].as_array().unwrap().len() >= 3);
    }
}

#[test]
fn random_regular_is_seeded() {
    let a = barygap(&["graph", "gen", "--family", "random-regular", "--n", "8", "--degree", "3", "--seed", "5"]);
    let b = barygap(&["--seed", "5", "graph", "gen", "--family", "random-regular", "--n", "8", "--degree", "3", "--threads", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bary_solve_and_uniformize() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let uni = dir.path().join("uni.json");
    std::fs::write(
        &inst,
        r#"{"measures":[{"d":1,"atoms":[[0.0],[0.5]],"masses":[0.5,0.5]},{"d":1,"atoms":[[1.0]],"masses":[1.0]}],"weights":[0.5,0.5],"p":2,"q":2}"#,
    )
    .unwrap();
    let out = barygap(&["bary", "solve", "--instance", p(&inst), "--quiet"]);
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    // Hubs at 1/2 and 3/4 cost 1/4 and 1/16, each carrying mass 1/2.
    assert!((r["value"].as_f64().unwrap() - 0.15625).abs() < 1e-9);
    assert!(r["marginal_violation"].as_f64().unwrap() < 1e-9);

    let out = barygap(&["bary", "solve", "--instance", p(&inst), "--method", "borgwardt", "--quiet"]);
    let b: Value = serde_json::from_slice(&out.stdout).unwrap();
    let ratio = b["value"].as_f64().unwrap() / r["value"].as_f64().unwrap();
    assert!((1.0 - 1e-9..=2.0 + 1e-9).contains(&ratio));

    assert!(barygap(&["bary", "uniformize", "--instance", p(&inst), "--eps", "0.5", "--out", p(&uni)]).status.success());
    let u = read_json(&uni);
    for m in u["measures"].as_array().unwrap() {
        let masses = m["masses"].as_array().unwrap();
        assert_eq!(masses.len(), 128);
        assert!(masses.iter().all(|x| x == &masses[0]));
    }
}

#[test]
fn verify_exit_codes() {
    let out = barygap(&["verify", "--lemma", "q1-witness", "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["passed"], true);
    assert_eq!(r["results"][0]["observed"]["distances"], serde_json::json!([114, 114, 114, 114]));

    let out = barygap(&["verify", "--lemma", "4.5", "--budget", "3", "--seed", "2"]);
    let again = barygap(&["verify", "--lemma", "4.5", "--budget", "3", "--seed", "2"]);
    let (a, b): (Value, Value) = (serde_json::from_slice(&out.stdout).unwrap(), serde_json::from_slice(&again.stdout).unwrap());
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["config_hash"], b["config_hash"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));

    assert_eq!(barygap(&["verify", "--lemma", "9.9"]).status.code(), Some(2));
    assert_eq!(barygap(&["verify"]).status.code(), Some(2));
}

#[test]
fn input_and_resource_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(barygap(&["embed", "--graph", p(&missing), "--k", "3", "--p", "2", "--q", "2"]).status.code(), Some(2));

    let g = dir.path().join("c6.json");
    let pts = dir.path().join("pts.json");
    assert!(barygap(&["graph", "gen", "--family", "cycle", "--n", "6", "--out", p(&g)]).status.success());
    assert!(barygap(&["embed", "--graph", p(&g), "--k", "4", "--p", "2", "--q", "2", "--out", p(&pts)]).status.success());
    assert_eq!(barygap(&["chub", "--points", p(&pts), "--cap", "100"]).status.code(), Some(3));
    assert_eq!(barygap(&["graph", "gen", "--family", "circulant", "--n", "6"]).status.code(), Some(2));
}
