//! Expression kernel: examples and property suites.

use std::collections::BTreeMap;

use lred_core::numcheck::{tree_eval, NumericEnv};
use lred_core::symkernel::{
    diff, eval_numeric, ex, parse, parse_tree, reduce_mod, substitute, Expr, RewriteRule, RuleSet, SymError, SymbolKind,
    SymbolTable,
};
use proptest::prelude::*;

fn rules(pairs: &[(&str, &str)]) -> RuleSet {
    RuleSet::from_rules(pairs.iter().map(|(l, r)| RewriteRule::from_expr_pair(&ex(l), ex(r)).unwrap()).collect()).unwrap()
}

fn point(vals: &[(&str, f64)]) -> BTreeMap<String, f64> {
    vals.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn parses_in_a_declared_table() {
    let mut t = SymbolTable::new();
    for s in ["t", "r", "x"] {
        t.declare(s, SymbolKind::Base);
    }
    t.declare_function("A", &["t", "r"]);
    let e = parse("A(t,r)*x", &t).unwrap();
    assert_eq!(e, Expr::app("A", vec![ex("t"), ex("r")]).mul(&ex("x")));
    assert_eq!(parse("x^2 + y^2", &t), Err(SymError::UnknownSymbol("y".into())));
    t.declare("u", SymbolKind::Fiber);
    t.declare("u_t", SymbolKind::Jet);
    t.declare("u_x", SymbolKind::Jet);
    let e = parse("u_t + u*u_x", &t).unwrap();
    assert_eq!(e.to_string(), parse(&e.to_string(), &t).unwrap().to_string());
}

#[test]
fn syntax_errors_carry_position() {
    match parse("x + * y", &SymbolTable::permissive()) {
        Err(SymError::Syntax { pos, .. }) => assert_eq!(pos, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn ring_identities_and_cancellation() {
    assert!(ex("(x+y)^2 - x^2 - 2*x*y - y^2").is_zero());
    assert_eq!(ex("(x^2-1)/(x-1)"), ex("x+1"));
    let e = ex("x - x");
    assert!(e.is_zero());
}

#[test]
fn contraction_with_radius_rule() {
    // x^j (A δ_ij + A_r x_i x_j / r) with r^2 = x.x gives A x_i + A_r r x_i
    let rs = rules(&[("x3^2", "r^2 - x1^2 - x2^2")]);
    let xs = ["x1", "x2", "x3"];
    for (i, xi) in xs.iter().enumerate() {
        let mut s = Expr::zero();
        for (j, xj) in xs.iter().enumerate() {
            let delta = if i == j { "A" } else { "0" };
            s = s.add(&ex(xj).mul(&ex(&format!("{delta} + Ar*{xi}*{xj}/r"))));
        }
        let got = reduce_mod(&s, &rs).unwrap();
        let want = reduce_mod(&ex(&format!("A*{xi} + Ar*r*{xi}")), &rs).unwrap();
        assert!(reduce_mod(&got.sub(&want), &rs).unwrap().is_zero(), "{got} vs {want}");
    }
}

#[test]
fn derivatives() {
    assert_eq!(diff(&ex("x^2+y^2"), "x"), ex("2*x"));
    assert_eq!(diff(&ex("A(t,r)*x"), "r"), ex("D(A, 1)(t, r)*x"));
    // mixed partials commute in the multi-index
    let a = diff(&diff(&ex("A(t,r)"), "r"), "t");
    let b = diff(&diff(&ex("A(t,r)"), "t"), "r");
    assert_eq!(a, b);
    assert_eq!(a, ex("D(A, 0, 1)(t, r)"));
}

#[test]
fn chain_rule_matches_finite_differences() {
    let env = NumericEnv::empty(7);
    let e = ex("f(g^2 + 1)*g");
    let d = diff(&e, "g");
    for g in [0.3, -0.7, 1.9] {
        let h = 1e-5;
        let num = (eval_numeric(&e, &point(&[("g", g + h)]), &env).unwrap()
            - eval_numeric(&e, &point(&[("g", g - h)]), &env).unwrap())
            / (2.0 * h);
        let sym = eval_numeric(&d, &point(&[("g", g)]), &env).unwrap();
        assert!((num - sym).abs() <= 1e-6 * (1.0 + sym.abs()), "{num} vs {sym}");
    }
}

#[test]
fn substitution() {
    let b: BTreeMap<String, Expr> = [("u_x".to_string(), ex("A + Ar*x^2/r"))].into_iter().collect();
    assert_eq!(substitute(&ex("u_x"), &b).unwrap(), ex("A + Ar*x^2/r"));
    let id: BTreeMap<String, Expr> = [("x".to_string(), ex("x"))].into_iter().collect();
    assert_eq!(substitute(&ex("x^3 + y/x"), &id).unwrap(), ex("x^3 + y/x"));
}

#[test]
fn sphere_rules() {
    let rs = rules(&[("z^2", "1 - x^2 - y^2")]);
    assert_eq!(reduce_mod(&ex("z^2"), &rs).unwrap(), ex("1 - x^2 - y^2"));
    let e = ex("x^4+2*x^2*y^2+y^4+2*x^2*z^2+2*y^2*z^2+z^4");
    assert_eq!(reduce_mod(&e, &rs).unwrap(), Expr::one());
}

#[test]
fn nonterminating_rule_is_rejected() {
    assert!(matches!(RewriteRule::from_expr_pair(&ex("z^2"), ex("z^2 + 1")), Err(SymError::NonTerminatingRule(..))));
}

/// The Veronese energy density: gradient terms computed by hand in floating point,
/// independently of the kernel.
fn veronese_lambda_float(x: f64, y: f64, z: f64) -> f64 {
    let s3 = 3f64.sqrt();
    // gradients of s3*(xy, xz, yz, (x^2-y^2)/2) and (x^2+y^2-2z^2)/2
    let grads = [
        [s3 * y, s3 * x, 0.0],
        [s3 * z, 0.0, s3 * x],
        [0.0, s3 * z, s3 * y],
        [s3 * x, -s3 * y, 0.0],
        [x, y, -2.0 * z],
    ];
    let mut lam = 0.0;
    for g in grads {
        let full = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
        let radial = x * g[0] + y * g[1] + z * g[2];
        lam += full - radial * radial;
    }
    lam
}

#[test]
fn veronese_energy_density_is_six() {
    // float oracle on the sphere
    for (x, y) in [(0.1, 0.2), (-0.4, 0.3), (0.55, -0.6)] {
        let z: f64 = (1.0 - x * x - y * y as f64).sqrt();
        assert!((veronese_lambda_float(x, y, z) - 6.0).abs() < 1e-12);
    }
    // symbolic expansion, reduced on the sphere
    let u = ["s3*x*y", "s3*x*z", "s3*y*z", "s3*(x^2 - y^2)/2", "(x^2 + y^2 - 2*z^2)/2"];
    let mut lam = Expr::zero();
    for c in u {
        let c = ex(c);
        let g: Vec<Expr> = ["x", "y", "z"].iter().map(|s| diff(&c, s)).collect();
        let radial = ex("x").mul(&g[0]).add(&ex("y").mul(&g[1])).add(&ex("z").mul(&g[2]));
        for gi in &g {
            lam = lam.add(&gi.mul(gi));
        }
        lam = lam.sub(&radial.mul(&radial));
    }
    let rs = rules(&[("z^2", "1 - x^2 - y^2"), ("s3^2", "3")]);
    assert_eq!(reduce_mod(&lam, &rs).unwrap(), Expr::int(6));
}

#[test]
fn numeric_evaluation() {
    let env = NumericEnv::empty(1);
    assert_eq!(eval_numeric(&ex("x^2+y^2"), &point(&[("x", 3.0), ("y", 4.0)]), &env).unwrap(), 25.0);
    let mut env = NumericEnv::empty(1);
    env.define("a", &["t"], parse_tree("1").unwrap());
    let v = eval_numeric(&ex("a(t)/r^3"), &point(&[("t", 0.5), ("r", 2.0)]), &env).unwrap();
    assert_eq!(v, 0.125);
}

// ---- property suites -------------------------------------------------------

const POOL: [&str; 4] = ["x", "y", "z", "w"];

fn arb_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0..POOL.len()).prop_map(|i| POOL[i].to_string()),
        (-4i64..=4).prop_map(|n| format!("({n})")),
        (1i64..=5, 2i64..=4).prop_map(|(p, q)| format!("({p}/{q})")),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (1 + ({b})^2))")),
            (inner.clone(), 0u32..=3).prop_map(|(a, k)| format!("({a})^{k}")),
        ]
    })
}

fn arb_point() -> impl Strategy<Value = BTreeMap<String, f64>> {
    proptest::collection::vec(-1.5f64..1.5, POOL.len())
        .prop_map(|v| POOL.iter().zip(v).map(|(k, x)| (k.to_string(), x)).collect())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn canonical_form_is_idempotent(text in arb_text()) {
        let e = ex(&text);
        let again = ex(&e.to_string());
        prop_assert_eq!(&again, &e);
        prop_assert!(e.sub(&e).is_zero());
    }

    #[test]
    fn canonical_form_agrees_with_raw_evaluation(text in arb_text(), p in arb_point()) {
        let env = NumericEnv::empty(3);
        let raw = tree_eval(&parse_tree(&text).unwrap(), &p, &env).unwrap();
        let canon = eval_numeric(&ex(&text), &p, &env).unwrap();
        prop_assert!(close(raw, canon, 1e-9), "{} -> {} vs {}", text, raw, canon);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn zero_test_matches_numeric_agreement(a in arb_text(), b in arb_text(), swap in any::<bool>()) {
        let env = NumericEnv::empty(3);
        // half the time compare against an algebraically equal rewrite of `a`
        let b = if swap { format!("(({a}) + ({b})) - ({b})") } else { b };
        let d = ex(&a).sub(&ex(&b));
        let pts: Vec<BTreeMap<String, f64>> = (0..50)
            .map(|k| POOL.iter().enumerate().map(|(i, s)| (s.to_string(), ((k * 7 + i * 13) % 29) as f64 / 9.0 - 1.5)).collect())
            .collect();
        let ta = parse_tree(&a).unwrap();
        let tb = parse_tree(&b).unwrap();
        let agree = pts.iter().all(|p| close(tree_eval(&ta, p, &env).unwrap(), tree_eval(&tb, p, &env).unwrap(), 1e-8));
        prop_assert_eq!(d.is_zero(), agree);
    }

    #[test]
    fn leibniz_rule(a in arb_text(), b in arb_text()) {
        let (a, b) = (ex(&a), ex(&b));
        let lhs = diff(&a.mul(&b), "x");
        let rhs = diff(&a, "x").mul(&b).add(&a.mul(&diff(&b, "x")));
        prop_assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn substitution_commutes_with_unrelated_differentiation(e in arb_text(), v in arb_text()) {
        // bind y to an expression free of x and y
        let v = substitute(&ex(&v), &[("x".to_string(), ex("w")), ("y".to_string(), ex("w"))].into_iter().collect()).unwrap();
        let beta: BTreeMap<String, Expr> = [("y".to_string(), v)].into_iter().collect();
        let e = ex(&e);
        let a = diff(&substitute(&e, &beta).unwrap(), "x");
        let b = substitute(&diff(&e, "x"), &beta).unwrap();
        prop_assert!(a.sub(&b).is_zero());
    }

    #[test]
    fn reduction_is_sound_on_the_sphere(text in arb_text(), x in -0.6f64..0.6, y in -0.6f64..0.6, w in -1.0f64..1.0) {
        let rs = rules(&[("z^2", "1 - x^2 - y^2")]);
        let e = ex(&text);
        let r = match reduce_mod(&e, &rs) {
            Ok(r) => r,
            Err(SymError::DivisionByZero) => return Ok(()),
            Err(err) => return Err(TestCaseError::fail(err.to_string())),
        };
        prop_assert!(r.num().degree_in(&lred_core::symkernel::Atom::sym("z")) < 2);
        let z = (1.0 - x * x - y * y).sqrt();
        let p = point(&[("x", x), ("y", y), ("z", z), ("w", w)]);
        let env = NumericEnv::empty(3);
        let (a, b) = (eval_numeric(&e, &p, &env), eval_numeric(&r, &p, &env));
        if let (Ok(a), Ok(b)) = (a, b) {
            if a.is_finite() && b.is_finite() && a.abs() < 1e6 {
                prop_assert!(close(a, b, 1e-7), "{} vs {}", a, b);
            }
        }
    }
}
