use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(rel: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "corpus", rel].iter().collect();
    p.to_string_lossy().into_owned()
}

fn gradedmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradedmt"))
        .args(args)
        .env_remove("GRADEDMT_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn schema() -> jsonschema::JSONSchema {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "schemas", "report.schema.json"].iter().collect();
    let v: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&v).expect("schema compiles")
}

fn json_run(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = gradedmt(&all);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap_or_else(|e| panic!("{args:?}: {e}\n{}", stdout(&o)));
    (o.status.code().unwrap(), v)
}

#[test]
fn eval_prints_the_value() {
    let m = corpus("structures/counterexample_m.json");
    let o = gradedmt(&["eval", "--structure", &m, "--formula", "forall x. P(x)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "3/4");
    let n = corpus("structures/counterexample_n.json");
    let o = gradedmt(&["eval", "--structure", &n, "--formula", "val(3/4) -> forall x. P(x)"]);
    assert_eq!(stdout(&o).trim(), "1/2");
}

#[test]
fn classify_prints_the_prefix_class() {
    let o = gradedmt(&["classify", "--formula", "forall x. exists y. R(x,y)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "Forall(2)");
}

#[test]
fn exit_codes() {
    let k3 = corpus("structures/k3.json");
    let k4 = corpus("structures/k4.json");
    assert_eq!(gradedmt(&["check-sub", "--sub", &k3, "--sup", &k4]).status.code(), Some(0));
    assert_eq!(gradedmt(&["check-sub", "--sub", &k4, "--sup", &k3]).status.code(), Some(1));
    assert_eq!(gradedmt(&["find-hom", "--source", &k4, "--target", &k3]).status.code(), Some(1));
    assert_eq!(gradedmt(&["check-sub", "--sub", "missing.json", "--sup", &k3]).status.code(), Some(2));
    assert_eq!(gradedmt(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(gradedmt(&["eval", "--structure", &k3, "--formula", "R(x"]).status.code(), Some(2));
    assert_eq!(gradedmt(&["eval", "--structure", &k3, "--formula", "R(x,y)"]).status.code(), Some(2));
    let ok = gradedmt(&["eval", "--structure", &k3, "--formula", "R(x,y)", "--assign", "x=v0", "--assign", "y=v2"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok).trim(), "1");
}

#[test]
fn budget_comes_from_the_environment() {
    let k3 = corpus("structures/k3.json");
    let k4 = corpus("structures/k4.json");
    let o = Command::new(env!("CARGO_BIN_EXE_gradedmt"))
        .args(["find-embed", "--source", &k3, "--target", &k4])
        .env("GRADEDMT_BUDGET", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn verify_suite_is_clean_and_reproducible() {
    let args = ["verify", "--suite", "los-tarski-lemma", "--seed", "7", "--instances", "200", "--format", "json"];
    let a = gradedmt(&args);
    assert_eq!(a.status.code(), Some(0));
    let b = gradedmt(&args);
    assert_eq!(a.stdout, b.stdout);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let mut with_output = args.to_vec();
    with_output.extend(["--output", out.to_str().unwrap(), "--jobs", "1"]);
    let c = gradedmt(&with_output);
    assert_eq!(c.status.code(), Some(0));
    assert!(c.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
    let other_seed = gradedmt(&["verify", "--suite", "los-tarski-lemma", "--seed", "8", "--instances", "200", "--format", "json"]);
    assert_ne!(other_seed.stdout, a.stdout);
}

#[test]
fn every_subcommand_report_matches_the_schema() {
    let schema = schema();
    let m = corpus("structures/counterexample_m.json");
    let n = corpus("structures/counterexample_n.json");
    let k3 = corpus("structures/k3.json");
    let k4 = corpus("structures/k4.json");
    let chain = corpus("chains/complete_graphs.json");
    let wg = corpus("theories/weighted_graph.theory");
    let dir = tempfile::tempdir().unwrap();
    let union_file = dir.path().join("union.json");
    let runs: Vec<(Vec<&str>, i32)> = vec![
        (vec!["eval", "--structure", &m, "--formula", "forall x. P(x)"], 0),
        (vec!["classify", "--formula", "exists x. forall y. R(x,y)"], 0),
        (vec!["check-sub", "--sub", &k3, "--sup", &k4], 0),
        (vec!["check-sub", "--sub", &k4, "--sup", &k3], 1),
        (vec!["enum-subs", "--structure", &m], 0),
        (vec!["find-hom", "--source", &k3, "--target", &k4], 0),
        (vec!["find-embed", "--source", &k4, "--target", &k3], 1),
        (vec!["diagram", "--structure", &m, "--depth", "1"], 0),
        (vec!["check-diagram", "--source", &k3, "--target", &k4], 0),
        (vec!["equiv", "--left", &m, "--right", &n], 0),
        (vec!["equiv", "--left", &m, "--right", &n, "--compare", "values", "--depth", "1"], 1),
        (vec!["union", "--chain", &chain, "--write", union_file.to_str().unwrap()], 0),
        (vec!["check-chain", "--chain", &chain, "--depth", "1"], 0),
        (vec!["implies-exists", "--left", &m, "--right", &n, "--truth-constants", "--depth", "1", "--vars", "1"], 1),
        (vec!["implies-exists", "--left", &n, "--right", &n, "--params", "d0", "--depth", "1"], 0),
        (vec!["amalgamate", "--bundled", "universal-existential", "--n", "2", "--truth-constants"], 0),
        (vec!["amalgamate", "--bundled", "counterexample", "--truth-constants"], 1),
        (vec!["amalgamate", "--left", &m, "--right", &m, "--common", &m, "--generators", "d0,d1,d2"], 0),
        (vec!["consequence", "--theory", &wg, "--formula", "forall x y. R(y,x) -> R(x,y)"], 0),
        (vec!["universal-consequences", "--theory", &wg, "--depth", "0", "--vars", "2"], 0),
        (vec!["counterexample"], 0),
        (vec!["counterexample", "--left", &n, "--right", &m], 1),
        (vec!["verify", "--suite", "exists-control", "--instances", "20"], 0),
        (vec!["verify", "--suite", "union-lemma", "--instances", "20"], 0),
        (vec!["verify", "--suite", "diagram-sweep", "--chain-size", "2", "--max-domain", "2", "--max-source", "1"], 0),
        (vec!["verify", "--suite", "amalgamation"], 0),
        (vec!["eval", "--structure", &m, "--formula", "P(x"], 2),
        (vec!["check-sub", "--sub", "missing.json", "--sup", &k3], 2),
    ];
    for (args, code) in runs {
        let (got, v) = json_run(&args);
        assert_eq!(got, code, "{args:?}: {v}");
        assert_eq!(v["exit_code"], code, "{args:?}");
        let msgs: Vec<String> = match schema.validate(&v) {
            Ok(()) => Vec::new(),
            Err(errors) => errors.map(|e| format!("{e} at {}", e.instance_path)).collect(),
        };
        assert!(msgs.is_empty(), "{args:?} does not match the schema: {msgs:?}\n{v}");
    }
    assert!(union_file.exists());
}

#[test]
fn schema_rejects_a_malformed_envelope() {
    let schema = schema();
    let bad = serde_json::json!({"command": "eval", "ok": true, "exit_code": 0, "result": {"value": "1"}});
    assert!(!schema.is_valid(&bad));
    let bad = serde_json::json!({"command": "eval", "ok": false, "exit_code": 0, "result": {"formula": "x", "value": "1"}});
    assert!(!schema.is_valid(&bad));
}
