//! The golden comparator accepts constant recombinations and rejects real changes.

use std::sync::OnceLock;

use lred::golden::{compare_golden, constant_combination, same_constant_span};
use lred::run::{run, Command};
use lred::{corpus_root, spec};
use lred_core::symkernel::{ex, q_int};
use serde_json::{json, Value};

fn euler() -> &'static (Value, Value) {
    static CELL: OnceLock<(Value, Value)> = OnceLock::new();
    CELL.get_or_init(|| {
        let lp = spec::load(&corpus_root().join("euler_rotational.lred.json")).unwrap();
        let report = run(Command::All, &lp, &[]).report;
        let golden: Value =
            serde_json::from_str(&std::fs::read_to_string(corpus_root().join("golden/euler_rotational.json")).unwrap()).unwrap();
        (report, golden)
    })
}

#[test]
fn unmodified_golden_passes() {
    let (r, g) = euler();
    let d = compare_golden(r, g);
    assert!(d.passed, "{:?}", d.diffs);
}

#[test]
fn swapped_and_scaled_components_pass() {
    let (r, g) = euler();
    let mut g = g.clone();
    let c = g["components"].as_array().unwrap().clone();
    g["components"] = json!([format!("2*({})", c[1].as_str().unwrap()), c[0]]);
    let d = compare_golden(r, &g);
    assert!(d.passed, "{:?}", d.diffs);
    // a mixed invertible recombination is the same class
    g["components"] = json!([
        format!("({}) + ({})", c[0].as_str().unwrap(), c[1].as_str().unwrap()),
        format!("({}) - 3*({})", c[0].as_str().unwrap(), c[1].as_str().unwrap()),
    ]);
    assert!(compare_golden(r, &g).passed);
}

#[test]
fn sign_error_fails_with_a_localized_diff() {
    let (r, g) = euler();
    let mut g = g.clone();
    g["components"][1] = json!("3*A(t, r) - r*D(A, 1)(t, r)");
    let d = compare_golden(r, &g);
    assert!(!d.passed);
    assert!(d.diffs.iter().any(|m| m.contains("golden component 2")), "{:?}", d.diffs);
    assert!(d.diffs.iter().all(|m| !m.contains("golden component 1 ")), "{:?}", d.diffs);
}

#[test]
fn wrong_fiber_basis_and_ranks_fail() {
    let (r, g) = euler();
    let mut bad = g.clone();
    bad["fiber_basis"][0] = json!(["x1", "x2", "0", "0"]);
    let d = compare_golden(r, &bad);
    assert!(!d.passed && d.diffs.iter().any(|m| m.contains("fiber basis")), "{:?}", d.diffs);
    // a function multiple of a basis vector spans the same fiber
    let mut ok = g.clone();
    ok["fiber_basis"][0] = json!(["t*x1", "t*x2", "t*x3", "0"]);
    assert!(compare_golden(r, &ok).passed);
    let mut bad = g.clone();
    bad["transversality"]["rank_base"] = json!(3);
    let d = compare_golden(r, &bad);
    assert_eq!(d.diffs.len(), 1, "{:?}", d.diffs);
    assert!(d.diffs[0].contains("rank_base"));
    let mut bad = g.clone();
    bad["verdicts"]["T"] = json!("outside");
    assert!(!compare_golden(r, &bad).passed);
}

#[test]
fn constant_combinations_are_exact() {
    let basis = [ex("x^2 + y"), ex("y/x")];
    let c = constant_combination(&basis, &ex("3*x^2 + 3*y - y/(2*x)")).unwrap().unwrap();
    assert_eq!(c, vec![q_int(3), q_int(-1) / q_int(2)]);
    assert!(constant_combination(&basis, &ex("x*y")).unwrap().is_none());
    assert!(same_constant_span(&basis, &[ex("y/x"), ex("x^2 + y + y/x")]).unwrap().is_empty());
}
