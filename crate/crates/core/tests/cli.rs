use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn brjuno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brjuno")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{}-{name}", std::process::id()))
}

#[test]
fn cf_table_for_tau_rule() {
    let out = brjuno(&["cf", "--x", "tau:4", "--depth", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rows = v["results"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let last = rows[4]["tau"]["value"].as_f64().unwrap();
    assert!((last - 4.0).abs() < 0.1, "{last}");
    assert_eq!(v["errors"].as_array().unwrap().len(), 0);
}

#[test]
fn csv_headers() {
    let cases: [(&[&str], &str); 3] = [
        (&["--format", "csv", "cf", "--x", "golden", "--depth", "3"], "n,a_n,p_n,q_n,tau_n,log_beta_n"),
        (&["--format", "csv", "brjuno", "--x", "silver"], "x,method,value,error_bound,depth,functional_residual"),
        (
            &["--format", "csv", "pexp", "--x", "golden", "--jmin", "8", "--jmax", "13"],
            "j,log2_rho,log2_M_p,log2_M_p_error",
        ),
    ];
    for (args, header) in cases {
        let out = brjuno(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().next(), Some(header));
    }
}

#[test]
fn rational_brjuno_uses_finite_sum() {
    let v = json(&brjuno(&["brjuno", "--x", "1/2"]));
    assert_eq!(v["results"]["method"], "btilde");
    let b = v["results"]["value"].as_f64().unwrap();
    assert!((b - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn irrational_brjuno_reports_functional_check() {
    let v = json(&brjuno(&["brjuno", "--x", "rand:3:100", "--tol", "1e-10"]));
    let fe = &v["results"]["functional_equation"];
    assert_eq!(fe["within_bound"], true);
    assert!(fe["residual"].as_f64().unwrap() <= 2e-10);
}

#[test]
fn exit_codes() {
    assert_eq!(brjuno(&["brjuno", "--x", "abc"]).status.code(), Some(2));
    assert_eq!(brjuno(&["nonsense"]).status.code(), Some(2));
    assert_eq!(brjuno(&["selftest", "--criteria", "99"]).status.code(), Some(2));
    assert_eq!(brjuno(&["--version"]).status.code(), Some(0));
    let out = brjuno(&["selftest", "--criteria", "1,2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["results"]["passed"], true);
}

#[test]
fn errors_are_reported_inside_the_envelope() {
    let v = json(&brjuno(&["brjuno", "--x", "abc"]));
    let e = &v["errors"][0];
    assert_eq!(e["kind"], "parse");
    assert_eq!(e["exit_code"], 2);
    assert!(v["results"].is_null());
}

#[test]
fn output_file_and_replay_reproduce_the_run() {
    let path = scratch("run.json");
    let p = path.to_str().unwrap();
    let out = brjuno(&["--output", p, "brjuno", "--x", "per:[2;1,3]", "--tol", "1e-11"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let saved = std::fs::read_to_string(&path).unwrap();
    let config = scratch("config.json");
    std::fs::rename(&path, &config).unwrap();
    // the saved config names the original destination
    let replayed = brjuno(&["replay", "--config", config.to_str().unwrap()]);
    assert_eq!(replayed.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), saved);
    std::fs::remove_file(path).unwrap();
    std::fs::remove_file(config).unwrap();
}

#[test]
fn outputs_validate_against_the_shipped_schema() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/output.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let runs: [&[&str]; 9] = [
        &["cf", "--x", "golden", "--depth", "6"],
        &["cf", "--x", "355/113"],
        &["brjuno", "--x", "2/5"],
        &["brjuno", "--x", "silver", "--tol", "1e-13"],
        &["brjuno", "--x", "rand:3:8", "--tol", "1e-12"],
        &["brjuno", "--x", "abc"],
        &["pexp", "--x", "golden", "--jmin", "8", "--jmax", "12"],
        &["pexp", "--x", "golden", "--jmin", "3", "--jmax", "9"],
        &["selftest", "--criteria", "1,2"],
    ];
    for args in runs {
        let doc = json(&brjuno(args));
        let problems: Vec<String> = validator.iter_errors(&doc).map(|e| format!("{e} at {}", e.instance_path)).collect();
        assert!(problems.is_empty(), "{args:?}: {problems:?}");
    }
    let mut doc = json(&brjuno(&["cf", "--x", "golden", "--depth", "2"]));
    doc["results"]["rows"][0]["q"] = Value::from(1);
    assert!(!validator.is_valid(&doc));
    doc.as_object_mut().unwrap().remove("version");
    assert!(!validator.is_valid(&doc));
}
