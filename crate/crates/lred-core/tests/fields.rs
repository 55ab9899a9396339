use std::collections::BTreeMap;

use lred_core::fields::{
    apply, field_is_zero, lie_bracket, BundleSpec, Chart, FieldError, JetContext, LieAlgebra, VectorField,
};
use lred_core::symkernel::{ex, Expr, RewriteRule, RuleSet, SymbolKind, SymbolTable};
use proptest::prelude::*;

fn vf(name: &str, pairs: &[(&str, &str)]) -> VectorField {
    VectorField::new(name, pairs.iter().map(|(s, c)| (s.to_string(), ex(c))).collect())
}

fn plane_bundle() -> BundleSpec {
    let mut table = SymbolTable::new();
    for s in ["x", "y"] {
        table.declare(s, SymbolKind::Base);
    }
    table.declare("u", SymbolKind::Fiber);
    BundleSpec { base: vec!["x".into(), "y".into()], fiber: vec!["u".into()], chart: Chart::default(), table }
}

fn sub(v: &VectorField, w: &VectorField) -> VectorField {
    v.add(&w.scaled(&Expr::int(-1)))
}

#[test]
fn rotation_algebra_has_integer_structure_constants() {
    // rotations of space lifted to a velocity field
    let mut table = SymbolTable::new();
    for s in ["x1", "x2", "x3"] {
        table.declare(s, SymbolKind::Base);
    }
    for s in ["u1", "u2", "u3"] {
        table.declare(s, SymbolKind::Fiber);
    }
    let b = BundleSpec {
        base: vec!["x1".into(), "x2".into(), "x3".into()],
        fiber: vec!["u1".into(), "u2".into(), "u3".into()],
        chart: Chart::default(),
        table,
    };
    let gens = vec![
        vf("V1", &[("x2", "-x3"), ("x3", "x2"), ("u2", "-u3"), ("u3", "u2")]),
        vf("V2", &[("x1", "x3"), ("x3", "-x1"), ("u1", "u3"), ("u3", "-u1")]),
        vf("V3", &[("x1", "-x2"), ("x2", "x1"), ("u1", "-u2"), ("u2", "u1")]),
    ];
    let alg = LieAlgebra::new(gens, &b).unwrap();
    let sc = alg.structure_constants().expect("constant closure");
    // [V1, V2] = -V3 with these orientations
    let c = &sc[&(0, 1)];
    assert_eq!(c, &vec![Expr::zero(), Expr::zero(), Expr::int(-1)]);
    assert!(apply(&alg.generators[0], &ex("x1^2+x2^2+x3^2"), &b.chart).unwrap().is_zero());
}

#[test]
fn inadmissible_fields_are_rejected() {
    let b = plane_bundle();
    let quad = vf("Q", &[("u", "u^2")]);
    assert!(matches!(quad.check_admissible(&b), Err(FieldError::Admissibility { .. })));
    let mixed = vf("M", &[("x", "u")]);
    assert!(matches!(mixed.check_admissible(&b), Err(FieldError::Admissibility { .. })));
    assert!(vf("S", &[("x", "x"), ("u", "x*u + y")]).check_admissible(&b).is_ok());
}

#[test]
fn non_closed_algebra_is_rejected() {
    let b = plane_bundle();
    // [∂x, x∂y + ∂u] = ∂y leaves the span even over functions
    let r = LieAlgebra::new(vec![vf("A", &[("x", "1")]), vf("B", &[("y", "x"), ("u", "1")])], &b);
    assert!(matches!(r, Err(FieldError::NotClosed { .. })));
}

#[test]
fn bracket_respects_chart_rules() {
    // on the unit circle y^2 = 1 - x^2 the field -y∂x + x∂y is tangent
    let mut chart = Chart::default();
    chart.constraint_rules = RuleSet::from_rules(vec![RewriteRule::from_expr_pair(&ex("y^2"), ex("1 - x^2")).unwrap()]).unwrap();
    let v = vf("R", &[("x", "-y"), ("y", "x")]);
    assert!(apply(&v, &ex("x^2 + y^2"), &chart).unwrap().is_zero());
    let br = lie_bracket(&v, &v, &chart).unwrap();
    assert!(field_is_zero(&br, &chart).unwrap());
}

#[test]
fn translation_prolongs_trivially() {
    let jc = JetContext::new(&["x".into(), "y".into()], &["u".into()], 3);
    let p = jc.prolong_field(&vf("X", &[("x", "1")]), &Chart::default()).unwrap();
    assert_eq!(p.coeffs.len(), 1);
    assert_eq!(p.coeff("x"), Expr::one());
}

/// Rotation combined with fiber scaling, V = -y∂x + x∂y + u∂u. Its flow maps the graph
/// of u to ũ(q) = e^ε u(R_{-ε} q); differentiating the transported jets at ε = 0 by
/// finite differences gives the prolongation coefficients without the recursion.
#[test]
fn prolonged_rotation_matches_flow() {
    let jc = JetContext::new(&["x".into(), "y".into()], &["u".into()], 2);
    let v = vf("V", &[("x", "-y"), ("y", "x"), ("u", "u")]);
    let p = jc.prolong_field(&v, &Chart::default()).unwrap();
    // jet values of u at the base point, in the rotated frame
    let (u1, u2, u11, u12, u22) = (0.7, -1.3, 0.4, 2.1, -0.9);
    let transported = |eps: f64| {
        let (c, s, g) = (eps.cos(), eps.sin(), eps.exp());
        [
            g * (u1 * c - u2 * s),
            g * (u1 * s + u2 * c),
            g * (c * c * u11 - 2.0 * c * s * u12 + s * s * u22),
            g * (c * s * u11 + (c * c - s * s) * u12 - c * s * u22),
            g * (s * s * u11 + 2.0 * c * s * u12 + c * c * u22),
        ]
    };
    let h = 1e-4;
    let (a, b) = (transported(h), transported(-h));
    let jets: BTreeMap<String, f64> = [("u", 0.5), ("u_x", u1), ("u_y", u2), ("u_xx", u11), ("u_xy", u12), ("u_yy", u22), ("x", 0.2), ("y", -0.6)]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    let env = lred_core::numcheck::NumericEnv::empty(0);
    for (k, name) in ["u_x", "u_y", "u_xx", "u_xy", "u_yy"].iter().enumerate() {
        let oracle = (a[k] - b[k]) / (2.0 * h);
        let got = lred_core::symkernel::eval_numeric(&p.coeff(name), &jets, &env).unwrap();
        assert!((oracle - got).abs() < 1e-6, "{name}: {oracle} vs {got}");
    }
}

#[test]
fn long_names_use_separators() {
    let jc = JetContext::new(&["x1".into(), "x2".into()], &["u".into()], 2);
    assert_eq!(jc.name("u", &[1, 0]).unwrap(), "u_x1_x2");
    let jc = JetContext::new(&["t".into(), "x".into()], &["u".into()], 2);
    assert_eq!(jc.name("u", &[1, 1]).unwrap(), "u_xx");
    let e = ex("u*u_x");
    assert_eq!(jc.total_derivative(&e, "x", &Chart::default()).unwrap(), ex("u_x^2 + u*u_xx"));
    assert!(matches!(jc.total_derivative(&ex("u_xx"), "t", &Chart::default()), Err(FieldError::OrderOverflow { .. })));
}

// ---- property suites -------------------------------------------------------

fn arb_poly(vars: &'static [&'static str]) -> impl Strategy<Value = String> {
    proptest::collection::vec((-3i64..=3, 0u32..=2, 0u32..=2), 1..4).prop_map(move |terms| {
        let parts: Vec<String> = terms.iter().map(|(c, a, b)| format!("({c})*{}^{a}*{}^{b}", vars[0], vars[1])).collect();
        parts.join(" + ")
    })
}

/// Random projectable field on the plane bundle: base part depends on x, y; fiber part affine in u.
fn arb_field() -> impl Strategy<Value = VectorField> {
    const XY: &[&str] = &["x", "y"];
    (arb_poly(XY), arb_poly(XY), arb_poly(XY), arb_poly(XY)).prop_map(|(a, b, c, d)| {
        VectorField::new(
            "F",
            [("x".to_string(), ex(&a)), ("y".to_string(), ex(&b)), ("u".to_string(), ex(&format!("({c})*u + {d}")))]
                .into_iter()
                .collect(),
        )
    })
}

fn arb_jet_expr() -> impl Strategy<Value = Expr> {
    const J: &[&str] = &["u_x", "u_y"];
    (arb_poly(J), arb_poly(&["x", "u"])).prop_map(|(a, b)| ex(&format!("({a})*({b})")))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi(a in arb_field(), b in arb_field(), c in arb_field()) {
        let ch = Chart::default();
        let ab = lie_bracket(&a, &b, &ch).unwrap();
        let ba = lie_bracket(&b, &a, &ch).unwrap();
        prop_assert!(field_is_zero(&ab.add(&ba), &ch).unwrap());
        let j = lie_bracket(&a, &lie_bracket(&b, &c, &ch).unwrap(), &ch).unwrap()
            .add(&lie_bracket(&b, &lie_bracket(&c, &a, &ch).unwrap(), &ch).unwrap())
            .add(&lie_bracket(&c, &lie_bracket(&a, &b, &ch).unwrap(), &ch).unwrap());
        prop_assert!(field_is_zero(&j, &ch).unwrap());
    }

    #[test]
    fn prolongation_is_a_homomorphism(a in arb_field(), b in arb_field()) {
        let ch = Chart::default();
        let jc = JetContext::new(&["x".into(), "y".into()], &["u".into()], 2);
        let lhs = jc.prolong_field(&lie_bracket(&a, &b, &ch).unwrap(), &ch).unwrap();
        let rhs = lie_bracket(&jc.prolong_field(&a, &ch).unwrap(), &jc.prolong_field(&b, &ch).unwrap(), &ch).unwrap();
        prop_assert!(field_is_zero(&sub(&lhs, &rhs), &ch).unwrap());
    }

    #[test]
    fn total_derivatives_commute(e in arb_jet_expr()) {
        let ch = Chart::default();
        let jc = JetContext::new(&["x".into(), "y".into()], &["u".into()], 3);
        let xy = jc.total_derivative(&jc.total_derivative(&e, "x", &ch).unwrap(), "y", &ch).unwrap();
        let yx = jc.total_derivative(&jc.total_derivative(&e, "y", &ch).unwrap(), "x", &ch).unwrap();
        prop_assert!(xy.sub(&yx).is_zero());
    }
}
