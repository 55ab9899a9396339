use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn lred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lred")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    lred::corpus_root().join(format!("{name}.lred.json")).display().to_string()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn check_reports_rank_failure_and_exits_zero() {
    let o = lred(&["check", &fixture("schwarzschild_stationary"), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["schema_version"], "lred-report/1");
    assert_eq!(r["transversality"]["rank_base"], 3);
    assert_eq!(r["transversality"]["rank_total"], 4);
    assert_eq!(r["transversality"]["holds"], false);
    assert_eq!(r["input_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn empty_kinematic_bundle_is_a_finding() {
    let o = lred(&["kinematic", &fixture("mech_translation"), "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["finding"]["kind"], "EmptyKinematic");
}

#[test]
fn reduce_emits_the_reduced_system() {
    let o = lred(&["reduce", &fixture("euler_rotational"), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    let golden: Value = serde_json::from_str(
        &std::fs::read_to_string(lred::corpus_root().join("golden/euler_rotational.json")).unwrap(),
    )
    .unwrap();
    let d = lred::golden::compare_golden(&r, &serde_json::json!({
        "problem": golden["problem"],
        "components": golden["components"],
    }));
    assert!(d.passed, "{:?}", d.diffs);
}

#[test]
fn text_output_is_readable() {
    let o = lred(&["check", &fixture("euler_rotational")]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("euler_rotational"));
    assert!(text.contains("finished in"));
}

#[test]
fn bad_input_is_a_tool_error() {
    let dir = std::env::temp_dir().join(format!("lred-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p: PathBuf = dir.join("broken.lred.json");
    std::fs::write(&p, "{ \"schema\": \"lred-problem/1\" ").unwrap();
    let o = lred(&["check", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = lred(&["check", dir.join("missing.lred.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn flags_override_options() {
    let o = lred(&["check", &fixture("heat_translation"), "--format", "json", "--seed", "7", "--max-degree", "3", "--tol-num", "1e-7"]);
    let r = json(&o);
    assert_eq!(r["options"]["seed"], 7);
    assert_eq!(r["options"]["max_degree"], 3);
    assert_eq!(r["options"]["tol_num"], "1.000e-7");
}

#[test]
fn corpus_root_can_be_overridden() {
    let dir = std::env::temp_dir().join(format!("lred-corpus-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::copy(fixture("heat_translation"), dir.join("heat_translation.lred.json")).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_lred"))
        .args(["check", "--format", "json"])
        .env("LRED_CORPUS", &dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["problem"], "heat_translation");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn extra_candidates_are_classified() {
    let dir = std::env::temp_dir().join(format!("lred-cand-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("cands.json");
    std::fs::write(&p, r#"[{ "name": "S", "components": { "t": "t", "x1": "x1", "x2": "x2", "x3": "x3" } }]"#).unwrap();
    let o = lred(&["residual", &fixture("euler_rotational"), "--format", "json", "--candidates", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&o);
    let s = r["residual"].as_array().unwrap().iter().find(|m| m["candidate"] == "S").expect("candidate reported");
    // a base scaling commutes with the rotations
    assert_eq!(s["verdict"], "in_automorphism_only");
    std::fs::remove_dir_all(&dir).unwrap();
}
