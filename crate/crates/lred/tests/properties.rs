//! Structural properties checked over every corpus problem.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use lred::golden::chart_field;
use lred::run::{run, Command};
use lred::spec::{self, LoadedProblem};
use lred::corpus_files;
use lred_core::checks::{ansatz_fd, invariant_drift};
use lred_core::dynamic::{reduce, substitute_functions, verify_solution, Reduction};
use lred_core::fields::{apply, field_is_zero, lie_bracket, JetContext, VectorField};
use lred_core::kinematic::{kinematic_diagram, KinematicDiagram};
use lred_core::numcheck::NumericEnv;
use lred_core::residual::{check_automorphism_member, check_isotropy_member, classify, universal_check, Verdict};
use lred_core::symkernel::{eval_numeric, ex, parse_tree, substitute, Expr};
use serde_json::Value;

struct Case {
    lp: LoadedProblem,
    kin: Option<KinematicDiagram>,
    red: Option<Reduction>,
    report: Value,
}

fn corpus() -> &'static [Case] {
    static CELL: OnceLock<Vec<Case>> = OnceLock::new();
    CELL.get_or_init(|| {
        corpus_files()
            .unwrap()
            .iter()
            .map(|f| {
                let lp = spec::load(f).unwrap();
                let kin = kinematic_diagram(&lp.problem).ok();
                let red = match (&kin, &lp.problem.operator) {
                    (Some(k), Some(_)) => Some(reduce(&lp.problem, k.clone()).unwrap_or_else(|e| panic!("{}: {e}", lp.problem.name))),
                    _ => None,
                };
                let report = run(Command::All, &lp, &[]).report;
                Case { lp, kin, red, report }
            })
            .collect()
    })
}

fn sub(v: &VectorField, w: &VectorField) -> VectorField {
    v.add(&w.scaled(&Expr::int(-1)))
}

fn strs(v: &Value) -> Vec<Expr> {
    v.as_array().unwrap().iter().map(|x| ex(x.as_str().unwrap())).collect()
}

#[test]
fn brackets_close_and_satisfy_jacobi() {
    for c in corpus() {
        let p = &c.lp.problem;
        let g = &p.algebra.generators;
        let ch = &p.bundle.chart;
        for ((a, b), coeffs) in &p.algebra.closure {
            let mut rhs = VectorField::zero("span");
            for (k, ck) in coeffs.iter().enumerate() {
                rhs = rhs.add(&g[k].scaled(ck));
            }
            let br = lie_bracket(&g[*a], &g[*b], ch).unwrap();
            assert!(field_is_zero(&sub(&br, &rhs), ch).unwrap(), "{}: [{}, {}]", p.name, g[*a].name, g[*b].name);
        }
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                for k in j + 1..g.len() {
                    let t = |x: &VectorField, y: &VectorField, z: &VectorField| {
                        lie_bracket(x, &lie_bracket(y, z, ch).unwrap(), ch).unwrap()
                    };
                    let s = t(&g[i], &g[j], &g[k]).add(&t(&g[j], &g[k], &g[i])).add(&t(&g[k], &g[i], &g[j]));
                    assert!(field_is_zero(&s, ch).unwrap(), "{}: Jacobi on {i},{j},{k}", p.name);
                }
            }
        }
    }
}

#[test]
fn prolongation_preserves_brackets() {
    for c in corpus() {
        let p = &c.lp.problem;
        let order = p.operator.as_ref().map(|o| o.order).unwrap_or(1);
        let jc = JetContext::new(&p.bundle.base, &p.bundle.fiber, order);
        let ch = &p.bundle.chart;
        let g = &p.algebra.generators;
        let pr: Vec<VectorField> = g.iter().map(|v| jc.prolong_field(v, ch).unwrap()).collect();
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                let lhs = jc.prolong_field(&lie_bracket(&g[i], &g[j], ch).unwrap(), ch).unwrap();
                let rhs = lie_bracket(&pr[i], &pr[j], ch).unwrap();
                assert!(field_is_zero(&sub(&lhs, &rhs), ch).unwrap(), "{}: {i},{j}", p.name);
            }
        }
    }
}

#[test]
fn kinematic_bundle_laws() {
    for c in corpus() {
        let Some(k) = &c.kin else {
            assert_eq!(c.lp.problem.name, "mech_translation");
            continue;
        };
        let p = &c.lp.problem;
        let kb = &k.bundle;
        assert_eq!(kb.fiber_dim, p.bundle.fiber.len() - kb.constraint_rank, "{}", p.name);
        if k.transversality.holds {
            assert_eq!(kb.fiber_dim, p.bundle.fiber.len(), "{}", p.name);
        }
        for e in k.constraints.all() {
            assert!(kb.restrict(&e).unwrap().is_zero(), "{}: constraint {e}", p.name);
        }
        assert!(kb.residual_transversal, "{}", p.name);
        // every certified invariant is annihilated by every residual generator
        for v in &kb.residual {
            for i in k.invariants.base.iter().chain(&k.invariants.fiber) {
                assert!(apply(v, &i.expr, &kb.bundle.chart).unwrap().is_zero(), "{}: {} on {}", p.name, v.name, i.name);
            }
        }
    }
}

#[test]
fn numeric_drift_and_chain_rule_budgets() {
    for c in corpus() {
        let p = &c.lp.problem;
        if let Some(k) = &c.kin {
            let d = invariant_drift(p, k).unwrap();
            assert!(d < 1e-6, "{}: drift {d}", p.name);
        }
        if let Some(r) = &c.red {
            let d = ansatz_fd(p, r).unwrap();
            assert!(d < 1e-5, "{}: ansatz fd {d}", p.name);
        }
    }
}

#[test]
fn ansatz_jets_are_derivatives_of_the_section() {
    for c in corpus() {
        let Some(r) = &c.red else { continue };
        let a = &r.ansatz;
        let jc = &a.jc;
        for u in &jc.dependents {
            for (i, x) in jc.independents.iter().enumerate() {
                let Some(n1) = jc.name(u, &[i]) else { continue };
                let d1 = a.chart.coord_partial(&a.section[u], x).unwrap();
                assert!(a.chart.reduce(&a.jets[&n1].sub(&d1)).unwrap().is_zero(), "{}: {n1}", c.lp.problem.name);
                for (j, y) in jc.independents.iter().enumerate() {
                    if let Some(n2) = jc.name(u, &[i, j]) {
                        let d2 = a.chart.coord_partial(&a.jets[&n1], y).unwrap();
                        assert!(a.chart.reduce(&a.jets[&n2].sub(&d2)).unwrap().is_zero(), "{}: {n2}", c.lp.problem.name);
                    }
                }
            }
        }
    }
}

/// The factorization identity and parametric independence, re-derived from the JSON text alone.
#[test]
fn serialized_certificates_reverify() {
    let mut checked = 0;
    for c in corpus() {
        let r = &c.report;
        if r.get("reduced").is_none() {
            continue;
        }
        let name = &c.lp.problem.name;
        let f = chart_field(&r["ansatz"]["chart"]).unwrap();
        let comps = strs(&r["reduced"]["components"]);
        let frame: Vec<String> = r["reduced"]["frame_elements"].as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect();
        let matrix: Vec<Vec<Expr>> = r["reduced"]["matrix"].as_array().unwrap().iter().map(strs).collect();
        assert_eq!(matrix.len(), comps.len());
        for (a, fa) in frame.iter().enumerate() {
            let restricted = ex(r["reduced"]["restricted"][fa].as_str().unwrap());
            let mut s = Expr::zero();
            for (q, cq) in comps.iter().enumerate() {
                s = s.add(&cq.mul(&matrix[q][a]));
            }
            assert!(f.is_zero(&s.sub(&restricted)).unwrap(), "{name}: factorization at {fa}");
        }
        let reduced_base: Vec<String> = r["ansatz"]["reduced_base"].as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect();
        let mut parametric: Vec<String> = c.lp.file.base.clone();
        for d in r["ansatz"]["chart"]["dependents"].as_array().unwrap() {
            parametric.push(d["name"].as_str().unwrap().to_string());
        }
        parametric.retain(|s| !reduced_base.contains(s));
        for q in &comps {
            for s in q.free_symbols() {
                assert!(!parametric.contains(&s), "{name}: component {q} depends on {s}");
            }
        }
        if let Some(sol) = r.get("solution") {
            let forms: BTreeMap<String, Expr> = sol["forms"].as_object().unwrap().iter().map(|(k, v)| (k.clone(), ex(v.as_str().unwrap()))).collect();
            let red = c.red.as_ref().unwrap();
            for q in &comps {
                let v = substitute_functions(q, &forms, &reduced_base, &red.ansatz.chart).unwrap();
                assert!(f.is_zero(&v).unwrap(), "{name}: reduced residual {v}");
            }
        }
        checked += 1;
    }
    assert!(checked >= 8, "only {checked} reports carried a reduction");
}

/// Classical reduction of a transverse problem: substitute u = U(invariant) directly and
/// differentiate numerically in the original coordinates.
#[test]
fn transversal_problems_match_direct_substitution() {
    let find = |n: &str| corpus().iter().find(|c| c.lp.problem.name == n).unwrap();
    let fd2 = |f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64, dx: bool| {
        let h = 1e-3;
        let g = |k: f64| if dx { f(x + k * h, y) } else { f(x, y + k * h) };
        (-g(2.0) + 16.0 * g(1.0) - 30.0 * g(0.0) + 16.0 * g(-1.0) - g(-2.0)) / (12.0 * h * h)
    };
    let mut env = NumericEnv::empty(0);
    env.define("U", &["s"], parse_tree("s^3 + 2*s + 1/s").unwrap());
    let big_u = |s: f64| s.powi(3) + 2.0 * s + 1.0 / s;

    // Laplace with rotations: U(r), r = |(x, y)|
    let c = find("laplace_rotation");
    let comps = &c.red.as_ref().unwrap().reduced.components;
    assert_eq!(comps.len(), 1);
    let mut ratios = Vec::new();
    for (x, y) in [(0.4, 0.9), (1.1, 0.5), (0.7, 1.3), (1.4, 1.2)] {
        let u = |x: f64, y: f64| big_u((x * x + y * y as f64).sqrt());
        let lap = fd2(&u, x, y, true) + fd2(&u, x, y, false);
        let r: f64 = (x * x + y * y as f64).sqrt();
        let pt: BTreeMap<String, f64> = [("r".to_string(), r), ("x".to_string(), x), ("y".to_string(), y)].into_iter().collect();
        ratios.push(eval_numeric(&comps[0], &pt, &env).unwrap() / lap);
    }
    for q in &ratios {
        assert!((q - ratios[0]).abs() < 1e-6 && ratios[0].abs() > 1e-3, "{ratios:?}");
    }

    // heat with translations: U(t)
    let c = find("heat_translation");
    let comps = &c.red.as_ref().unwrap().reduced.components;
    for t in [0.5, 0.9, 1.3] {
        let h = 1e-4;
        let direct = (big_u(t + h) - big_u(t - h)) / (2.0 * h);
        let pt: BTreeMap<String, f64> = [("t".to_string(), t)].into_iter().collect();
        let v = eval_numeric(&comps[0], &pt, &env).unwrap();
        assert!((v - direct).abs() < 1e-6 * (1.0 + direct.abs()), "{v} vs {direct}");
    }
    // the transverse ansatz is the identity on fibers
    let a = &c.red.as_ref().unwrap().ansatz;
    assert_eq!(substitute(&ex("u"), &a.section).unwrap(), ex("U(t)"));
}

#[test]
fn generators_pass_both_membership_tests() {
    for c in corpus() {
        let (Some(k), p) = (&c.kin, &c.lp.problem) else { continue };
        for g in &p.algebra.generators {
            let iso = check_isotropy_member(g, &p.bundle, &k.bundle).unwrap();
            assert_eq!(iso.verdict, Verdict::InIsotropy, "{}: {}", p.name, g.name);
            let aut = check_automorphism_member(g, &p.bundle, &k.bundle).unwrap();
            assert_eq!(aut.verdict, Verdict::InAutomorphismOnly, "{}: {}", p.name, g.name);
            assert_eq!(aut.bracket_coefficients.len(), k.bundle.residual.len());
        }
    }
}

#[test]
fn extra_candidates_do_not_change_verdicts() {
    let c = corpus().iter().find(|c| c.lp.problem.name == "euler_rotational").unwrap();
    let extra = vec![
        VectorField::new("N", [("u1".to_string(), ex("1"))].into_iter().collect()),
        VectorField::new("S", [("x1".to_string(), ex("x1")), ("x2".to_string(), ex("x2")), ("x3".to_string(), ex("x3"))].into_iter().collect()),
    ];
    let alone = run(Command::Residual, &c.lp, &[]).report;
    let more = run(Command::Residual, &c.lp, &extra).report;
    for m in alone["residual"].as_array().unwrap() {
        let again = more["residual"].as_array().unwrap().iter().find(|x| x["candidate"] == m["candidate"]).unwrap();
        assert_eq!(m, again);
    }
    let k = c.kin.as_ref().unwrap();
    assert_eq!(classify(&extra[0], &c.lp.problem.bundle, &k.bundle).unwrap().verdict, Verdict::Outside);
}

#[test]
fn universal_problems_solve_with_their_sections() {
    for c in corpus() {
        let (Some(k), Some(r), p) = (&c.kin, &c.red, &c.lp.problem) else { continue };
        if !universal_check(p, k).unwrap().universal {
            continue;
        }
        if let Some(forms) = &p.solution {
            let cert = verify_solution(forms, r, p.operator.as_ref().unwrap(), None).unwrap();
            assert!(cert.passed && cert.original.iter().all(|(_, e)| e.is_zero()), "{}", p.name);
        } else {
            // no reduced unknowns to choose: the constructed section is the solution
            assert!(r.reduced.components.is_empty() || r.reduced.components.iter().all(|e| e.is_zero()), "{}", p.name);
        }
    }
}
