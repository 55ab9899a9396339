use std::collections::BTreeMap;

use lred_core::fields::{Chart, JetContext, VectorField};
use lred_core::numcheck::{
    fd_crosscheck, flow_invariance, residual_scan, section_residual, ChartSampler, NumericEnv, SamplePlan,
};
use lred_core::symkernel::{ex, RewriteRule, RuleSet};
use proptest::prelude::*;

fn sphere_chart() -> Chart {
    let mut c = Chart::default();
    c.constraint_rules = RuleSet::from_rules(vec![RewriteRule::from_expr_pair(&ex("z^2"), ex("1 - x^2 - y^2")).unwrap()]).unwrap();
    c.positive.push("z".into());
    c.boxes.insert("x".into(), (-0.5, 0.5));
    c.boxes.insert("y".into(), (-0.5, 0.5));
    c
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn drift_separates_invariants_from_non_invariants() {
    let chart = Chart::default();
    let env = NumericEnv::empty(1);
    let v = VectorField::new("R", [("x".to_string(), ex("-y")), ("y".to_string(), ex("x"))].into_iter().collect());
    let pts = ChartSampler::new(&chart, &names(&["x", "y"]), &BTreeMap::new(), vec![], &SamplePlan::new(3, 10), &env)
        .points(10)
        .unwrap();
    assert!(flow_invariance(&ex("x^2+y^2"), &v, &chart, &pts, 0.1, &env).unwrap() < 1e-7);
    // x changes by roughly 0.1*y over the flow, well above any tolerance
    assert!(flow_invariance(&ex("x"), &v, &chart, &pts, 0.1, &env).unwrap() > 1e-2);
}

#[test]
fn finite_differences_agree_with_symbolic_partials() {
    let chart = Chart::default();
    let env = NumericEnv::empty(1);
    let plan = SamplePlan::new(11, 20);
    let poly = ex("x^3*y - 2*x*y^2 + 7");
    let pts = ChartSampler::new(&chart, &names(&["x", "y"]), &BTreeMap::new(), vec![], &plan, &env).points(20).unwrap();
    assert!(fd_crosscheck(&poly, "x", &chart, &pts, &env).unwrap() < 1e-9);
    // the sampler keeps x - y away from zero
    let rat = ex("x*y/(x - y)");
    let pts = ChartSampler::new(&chart, &names(&["x", "y"]), &BTreeMap::new(), vec![ex("x - y")], &plan, &env)
        .points(20)
        .unwrap();
    assert!(pts.iter().all(|p| (p["x"] - p["y"]).abs() > plan.exclusion));
    assert!(fd_crosscheck(&rat, "y", &chart, &pts, &env).unwrap() < 1e-6);
}

#[test]
fn constrained_partials_on_the_sphere() {
    let chart = sphere_chart();
    let env = NumericEnv::empty(1);
    let pts = ChartSampler::new(&chart, &names(&["x", "y", "z"]), &BTreeMap::new(), vec![], &SamplePlan::new(5, 10), &env)
        .points(10)
        .unwrap();
    for p in &pts {
        assert!(p["z"] > 0.0);
        assert!((p["x"].powi(2) + p["y"].powi(2) + p["z"].powi(2) - 1.0).abs() < 1e-12);
    }
    // z is a function of (x, y) on this chart
    assert!(fd_crosscheck(&ex("x*z + z^3"), "x", &chart, &pts, &env).unwrap() < 1e-6);
}

#[test]
fn section_residual_detects_perturbation() {
    // heat equation with the polynomial solution x^2 + 2t
    let jc = JetContext::new(&names(&["t", "x"]), &names(&["u"]), 2);
    let chart = Chart::default();
    let env = NumericEnv::empty(1);
    let op = vec![ex("u_t - u_xx")];
    let pts = ChartSampler::new(&chart, &names(&["t", "x"]), &BTreeMap::new(), vec![], &SamplePlan::new(9, 20), &env)
        .points(20)
        .unwrap();
    let good: BTreeMap<String, _> = [("u".to_string(), ex("x^2 + 2*t"))].into_iter().collect();
    assert!(section_residual(&op, &good, &jc, &chart, &pts, &env).unwrap()[0] < 1e-8);
    let bad: BTreeMap<String, _> = [("u".to_string(), ex("x^2 + 2*t*(1 + 1/1000)"))].into_iter().collect();
    assert!(section_residual(&op, &bad, &jc, &chart, &pts, &env).unwrap()[0] > 1e-5);
}

#[test]
fn residual_scan_reports_maxima() {
    let env = NumericEnv::empty(1);
    let pts: Vec<BTreeMap<String, f64>> = [1.0, -3.0, 2.0].iter().map(|x| [("x".to_string(), *x)].into_iter().collect()).collect();
    assert_eq!(residual_scan(&[ex("x"), ex("0")], &pts, &env).unwrap(), vec![3.0, 0.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampler_is_reproducible_and_respects_the_chart(seed in any::<u64>()) {
        let chart = sphere_chart();
        let env = NumericEnv::empty(seed);
        let plan = SamplePlan::new(seed, 8).with_boxes(&chart.boxes);
        let free = names(&["x", "y", "z"]);
        let a = ChartSampler::new(&chart, &free, &BTreeMap::new(), vec![ex("x")], &plan, &env).points(8).unwrap();
        let b = ChartSampler::new(&chart, &free, &BTreeMap::new(), vec![ex("x")], &plan, &env).points(8).unwrap();
        prop_assert_eq!(&a, &b);
        for p in &a {
            prop_assert!(p["x"].abs() <= 0.5 && p["y"].abs() <= 0.5);
            prop_assert!(p["x"].abs() > plan.exclusion);
            prop_assert!(p["z"] > 0.0);
        }
    }
}
