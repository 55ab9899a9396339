//! Report sections as JSON values, and the plain-text rendering.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use lred_core::dynamic::{Ansatz, InvariantFrame, ReducedOperator, SolutionCertificate};
use lred_core::fields::{Chart, LieAlgebra, VectorField};
use lred_core::kinematic::{Invariant, InvariantSet, IsotropyConstraintSet, KinematicBundle, Provenance, TransversalityReport};
use lred_core::residual::{MembershipCertificate, UniversalReport};
use lred_core::symkernel::{Expr, RuleSet};

pub const REPORT_SCHEMA: &str = "lred-report/1";

pub fn s(e: &Expr) -> Value {
    Value::String(e.to_string())
}

pub fn list(v: &[Expr]) -> Value {
    Value::Array(v.iter().map(s).collect())
}

pub fn map(m: &BTreeMap<String, Expr>) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.clone(), s(v))).collect())
}

fn str_map(m: &BTreeMap<String, String>) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
}

pub fn field(v: &VectorField) -> Value {
    json!({ "name": v.name, "components": map(&v.coeffs) })
}

pub fn rules(r: &RuleSet) -> Value {
    Value::Array(
        r.rules()
            .iter()
            .map(|x| {
                let lhs = Expr::atom(x.lhs.clone()).pow(x.power as i64).expect("power");
                json!({ "lhs": lhs.to_string(), "rhs": x.rhs.to_string() })
            })
            .collect(),
    )
}

/// Enough of a chart to re-check identities from the report alone.
pub fn chart(c: &Chart) -> Value {
    let deps: Vec<Value> = c.dependents.iter().map(|(n, d)| json!({ "name": n, "square": d.square.to_string() })).collect();
    json!({
        "dependents": deps,
        "rules": rules(&c.identity_rules),
        "constraints": rules(&c.constraint_rules),
        "positive": c.positive,
    })
}

pub fn algebra(a: &LieAlgebra) -> Value {
    let closure: Vec<Value> = a
        .closure
        .iter()
        .filter(|(_, c)| c.iter().any(|x| !x.is_zero()))
        .map(|((i, j), c)| {
            json!({ "left": a.generators[*i].name, "right": a.generators[*j].name, "coefficients": list(c) })
        })
        .collect();
    json!({
        "generators": a.generators.iter().map(field).collect::<Vec<_>>(),
        "closure": closure,
        "constant_structure": a.structure_constants().is_some(),
    })
}

pub fn transversality(t: &TransversalityReport) -> Value {
    json!({
        "rank_base": t.rank_base,
        "rank_total": t.rank_total,
        "holds": t.holds,
        "generators": t.generators,
        "witness": str_map(&t.witness),
    })
}

pub fn isotropy(c: &IsotropyConstraintSet) -> Value {
    json!({
        "combinations": c.combos.iter().map(|k| list(k)).collect::<Vec<_>>(),
        "constraints": list(&c.constraints),
        "discrete": list(&c.discrete),
    })
}

pub fn kinematic(kb: &KinematicBundle) -> Value {
    json!({
        "fiber_names": kb.fiber_names,
        "fiber_dim": kb.fiber_dim,
        "constraint_rank": kb.constraint_rank,
        "inclusion": map(&kb.inclusion),
        "root_bindings": map(&kb.root_bindings),
        "reduced_rules": rules(&kb.reduced_rules),
        "residual_generators": kb.residual.iter().map(field).collect::<Vec<_>>(),
        "residual_transversal": kb.residual_transversal,
        "chart": chart(&kb.bundle.chart),
    })
}

fn invariant(i: &Invariant) -> Value {
    let prov = match i.provenance {
        Provenance::Coordinate => "coordinate".to_string(),
        Provenance::Hint => "hint".to_string(),
        Provenance::Computed(d) => format!("computed(degree {d})"),
    };
    json!({ "name": i.name, "expr": i.expr.to_string(), "provenance": prov })
}

pub fn invariants(inv: &InvariantSet) -> Value {
    json!({
        "base": inv.base.iter().map(invariant).collect::<Vec<_>>(),
        "fiber": inv.fiber.iter().map(invariant).collect::<Vec<_>>(),
        "expected_base": inv.expected_base,
        "expected_fiber": inv.expected_fiber,
    })
}

pub fn ansatz(a: &Ansatz) -> Value {
    let unknowns: Vec<Value> = a.unknowns.iter().map(|(n, e)| json!({ "name": n, "atom": e.to_string() })).collect();
    json!({
        "unknowns": unknowns,
        "reduced_base": a.reduced_base,
        "fiber_values": map(&a.fiber_values),
        "section": map(&a.section),
        "roots": map(&a.roots),
        "chart": chart(&a.chart),
    })
}

pub fn frame(fr: &InvariantFrame) -> Value {
    json!({
        "elements": fr.frame,
        "dim": fr.dim(),
        "vectors": fr.vectors.iter().map(|v| list(v)).collect::<Vec<_>>(),
    })
}

pub fn reduced(r: &ReducedOperator) -> Value {
    json!({
        "frame_elements": r.frame_symbols,
        "restricted": map(&r.restricted),
        "matrix": r.frame.iter().map(|v| list(v)).collect::<Vec<_>>(),
        "components": list(&r.components),
        "cross_section": map(&r.cross_section),
        "factorization_verified": r.factorization_verified,
        "independence_verified": r.independence_verified,
    })
}

fn floats(v: &Option<Vec<f64>>) -> Value {
    match v {
        None => Value::Null,
        Some(x) => json!(x.iter().map(|f| sci(*f)).collect::<Vec<_>>()),
    }
}

/// Fixed-format float text so reports are stable byte for byte.
pub fn sci(f: f64) -> String {
    format!("{f:.3e}")
}

pub fn solution(forms: &BTreeMap<String, Expr>, c: &SolutionCertificate) -> Value {
    let original: Map<String, Value> = c.original.iter().map(|(k, v)| (k.clone(), s(v))).collect();
    json!({
        "forms": map(forms),
        "reduced_residual": list(&c.reduced),
        "original_residual": original,
        "numeric_reduced": floats(&c.numeric_reduced),
        "numeric_original": floats(&c.numeric_original),
        "passed": c.passed,
    })
}

pub fn membership(m: &MembershipCertificate) -> Value {
    let failure = match &m.failure {
        None => Value::Null,
        Some(f) => json!({ "field": f.field, "component": f.component, "point": str_map(&f.point) }),
    };
    json!({
        "candidate": m.candidate,
        "verdict": m.verdict.as_str(),
        "tangent": m.tangent,
        "isotropy_coefficients": m.isotropy_coefficients.as_ref().map(|c| list(c)),
        "bracket_coefficients": m.bracket_coefficients.iter().map(|c| list(c)).collect::<Vec<_>>(),
        "failure": failure,
        "scope": "infinitesimal bracket test only; group-level orbit stabilization is not checked",
    })
}

pub fn universal(u: &UniversalReport) -> Value {
    json!({
        "universal": u.universal,
        "generators": u.generators,
        "frame": frame(&u.frame),
    })
}

/// Human-readable rendering of a report value.
pub fn render_text(r: &Value) -> String {
    let mut out = String::new();
    let get = |k: &str| r.get(k).filter(|v| !v.is_null());
    out.push_str(&format!("problem {}  [{}]\n", r["problem"].as_str().unwrap_or("?"), r["command"].as_str().unwrap_or("?")));
    if let Some(t) = get("transversality") {
        out.push_str(&format!(
            "transversality: rank_base={} rank_total={} holds={}\n",
            t["rank_base"], t["rank_total"], t["holds"]
        ));
    }
    if let Some(i) = get("isotropy") {
        let cs: Vec<&str> = i["constraints"].as_array().map(|a| a.iter().filter_map(|x| x.as_str()).collect()).unwrap_or_default();
        if !cs.is_empty() {
            out.push_str("isotropy constraints:\n");
            for c in cs {
                out.push_str(&format!("  {c} = 0\n"));
            }
        }
    }
    if let Some(k) = get("kinematic") {
        out.push_str(&format!("kinematic fiber: dim {} coordinates {}\n", k["fiber_dim"], k["fiber_names"]));
        if let Some(m) = k["inclusion"].as_object() {
            for (u, e) in m {
                out.push_str(&format!("  {u} = {}\n", e.as_str().unwrap_or("")));
            }
        }
        if let Some(rs) = k["reduced_rules"].as_array() {
            for x in rs {
                out.push_str(&format!("  rule {} -> {}\n", x["lhs"].as_str().unwrap_or(""), x["rhs"].as_str().unwrap_or("")));
            }
        }
    }
    if let Some(i) = get("invariants") {
        for side in ["base", "fiber"] {
            if let Some(a) = i[side].as_array() {
                let items: Vec<String> =
                    a.iter().map(|x| format!("{} = {}", x["name"].as_str().unwrap_or(""), x["expr"].as_str().unwrap_or(""))).collect();
                out.push_str(&format!("{side} invariants: {}\n", if items.is_empty() { "none".into() } else { items.join(", ") }));
            }
        }
    }
    if let Some(a) = get("ansatz") {
        out.push_str("ansatz:\n");
        if let Some(m) = a["section"].as_object() {
            for (u, e) in m {
                out.push_str(&format!("  {u} = {}\n", e.as_str().unwrap_or("")));
            }
        }
    }
    if let Some(f) = get("frame") {
        out.push_str(&format!("invariant frame: dim {}\n", f["dim"]));
    }
    if let Some(d) = get("reduced") {
        out.push_str("reduced components:\n");
        if let Some(a) = d["components"].as_array() {
            for (i, c) in a.iter().enumerate() {
                out.push_str(&format!("  Q{} = {}\n", i + 1, c.as_str().unwrap_or("")));
            }
        }
        out.push_str(&format!(
            "  factorization verified: {}, independence verified: {}\n",
            d["factorization_verified"], d["independence_verified"]
        ));
    }
    if let Some(v) = get("solution") {
        out.push_str(&format!("closed form passes: {}\n", v["passed"]));
    }
    if let Some(rs) = get("residual").and_then(|x| x.as_array()) {
        for m in rs {
            out.push_str(&format!("residual candidate {}: {}\n", m["candidate"].as_str().unwrap_or(""), m["verdict"].as_str().unwrap_or("")));
        }
    }
    if let Some(u) = get("universal") {
        out.push_str(&format!("universal: {} (frame dim {})\n", u["universal"], u["frame"]["dim"]));
    }
    if let Some(n) = get("numeric") {
        if let Some(m) = n.as_object() {
            for (k, v) in m {
                out.push_str(&format!("numeric {k}: {v}\n"));
            }
        }
    }
    if let Some(f) = get("finding") {
        out.push_str(&format!("FINDING: {}\n", f["message"].as_str().unwrap_or("")));
    }
    if let Some(e) = get("error") {
        out.push_str(&format!("ERROR ({}): {}\n", e["stage"].as_str().unwrap_or(""), e["message"].as_str().unwrap_or("")));
    }
    out
}
