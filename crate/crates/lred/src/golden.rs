//! Golden comparison of reports, up to constant recombination of the frame and
//! function-linear recombination of kinematic fiber bases.

use std::collections::BTreeMap;

use serde_json::Value;

use lred_core::linalg::{rank, solve_columns, Field};
use lred_core::symkernel::{diff, lcm, parse, Expr, Mono, Poly, Q, RewriteRule, RuleSet, SymbolTable};

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenDiff {
    pub passed: bool,
    pub diffs: Vec<String>,
}

fn ex(s: &str) -> Result<Expr, String> {
    parse(s, &SymbolTable::permissive()).map_err(|e| format!("cannot parse `{s}`: {e}"))
}

fn exprs(v: &Value) -> Result<Vec<Expr>, String> {
    v.as_array().ok_or("expected an array of expressions")?.iter().map(|x| ex(x.as_str().unwrap_or(""))).collect()
}

/// Rules of a serialized chart, identity and constraint rules together.
pub fn chart_field(chart: &Value) -> Result<Field, String> {
    let mut rs = RuleSet::new();
    for k in ["rules", "constraints"] {
        for r in chart[k].as_array().map(|a| a.as_slice()).unwrap_or(&[]) {
            let lhs = ex(r["lhs"].as_str().unwrap_or(""))?;
            let rhs = ex(r["rhs"].as_str().unwrap_or(""))?;
            let rule = RewriteRule::from_expr_pair(&lhs, rhs).map_err(|e| e.to_string())?;
            rs.push(rule).map_err(|e| e.to_string())?;
        }
    }
    Ok(Field::new(rs))
}

/// Coefficient vectors of expressions over a common denominator, so that constant
/// linear relations become relations of rational vectors.
fn coefficient_vectors(es: &[Expr]) -> Result<Vec<BTreeMap<Mono, Q>>, String> {
    let mut l = Poly::one();
    for e in es {
        l = lcm(&l, e.den());
    }
    es.iter()
        .map(|e| {
            let k = l.div_exact(e.den()).ok_or("denominator does not divide the common multiple")?;
            Ok(e.num().mul(&k).terms().iter().cloned().collect())
        })
        .collect()
}

/// Solve `target = sum c_i basis_i` with rational constants c_i.
pub fn constant_combination(basis: &[Expr], target: &Expr) -> Result<Option<Vec<Q>>, String> {
    let mut all = basis.to_vec();
    all.push(target.clone());
    let vecs = coefficient_vectors(&all)?;
    let mut monos: Vec<Mono> = vecs.iter().flat_map(|v| v.keys().cloned()).collect();
    monos.sort();
    monos.dedup();
    let col = |v: &BTreeMap<Mono, Q>| -> Vec<Expr> {
        monos.iter().map(|m| v.get(m).map(|q| Expr::constant(q.clone())).unwrap_or_else(Expr::zero)).collect()
    };
    let cols: Vec<Vec<Expr>> = vecs[..basis.len()].iter().map(col).collect();
    let b = col(&vecs[basis.len()]);
    let f = Field::new(RuleSet::new());
    let sol = solve_columns(&cols, &b, &f).map_err(|e| e.to_string())?;
    Ok(sol.map(|c| c.iter().map(|x| x.const_value().expect("constant system")).collect()))
}

/// Each side lies in the constant span of the other: equal up to an invertible
/// constant recombination.
pub fn same_constant_span(a: &[Expr], b: &[Expr]) -> Result<Vec<String>, String> {
    let mut diffs = Vec::new();
    for (i, x) in a.iter().enumerate() {
        if constant_combination(b, x)?.is_none() {
            diffs.push(format!("component {} `{x}` is not a constant combination of the golden components", i + 1));
        }
    }
    for (i, x) in b.iter().enumerate() {
        if constant_combination(a, x)?.is_none() {
            diffs.push(format!("golden component {} `{x}` is not recovered", i + 1));
        }
    }
    Ok(diffs)
}

/// Row spaces over the chart's function field coincide.
pub fn same_function_span(a: &[Vec<Expr>], b: &[Vec<Expr>], f: &Field) -> Result<bool, String> {
    let ra = rank(a, f).map_err(|e| e.to_string())?;
    let rb = rank(b, f).map_err(|e| e.to_string())?;
    let both: Vec<Vec<Expr>> = a.iter().chain(b).cloned().collect();
    let rab = rank(&both, f).map_err(|e| e.to_string())?;
    Ok(ra == rb && rb == rab)
}

/// Fiber basis vectors of a serialized kinematic section, in the given fiber order.
pub fn fiber_basis(kinematic: &Value, fiber: &[String]) -> Result<Vec<Vec<Expr>>, String> {
    let names: Vec<String> = kinematic["fiber_names"]
        .as_array()
        .ok_or("kinematic section has no fiber names")?
        .iter()
        .map(|x| x.as_str().unwrap_or("").to_string())
        .collect();
    let mut incl = Vec::new();
    for u in fiber {
        incl.push(ex(kinematic["inclusion"][u].as_str().ok_or(format!("no inclusion entry for `{u}`"))?)?);
    }
    Ok(names.iter().map(|v| incl.iter().map(|e| diff(e, v)).collect()).collect())
}

pub fn compare_golden(report: &Value, golden: &Value) -> GoldenDiff {
    match compare(report, golden) {
        Ok(diffs) => GoldenDiff { passed: diffs.is_empty(), diffs },
        Err(e) => GoldenDiff { passed: false, diffs: vec![e] },
    }
}

fn compare(report: &Value, golden: &Value) -> Result<Vec<String>, String> {
    let mut diffs = Vec::new();
    if report["problem"] != golden["problem"] {
        diffs.push(format!("problem {} vs golden {}", report["problem"], golden["problem"]));
    }
    if let Some(t) = golden.get("transversality") {
        for k in ["rank_base", "rank_total", "holds"] {
            if t.get(k).is_some() && report["transversality"][k] != t[k] {
                diffs.push(format!("transversality.{k}: {} vs golden {}", report["transversality"][k], t[k]));
            }
        }
    }
    if let Some(kind) = golden.get("finding") {
        if report["finding"]["kind"] != *kind {
            diffs.push(format!("finding {} vs golden {kind}", report["finding"]["kind"]));
        }
    }
    if let Some(d) = golden.get("fiber_dim") {
        if report["kinematic"]["fiber_dim"] != *d {
            diffs.push(format!("fiber_dim {} vs golden {d}", report["kinematic"]["fiber_dim"]));
        }
    }
    if let Some(gb) = golden.get("fiber_basis") {
        let fiber: Vec<String> = golden["fiber"].as_array().ok_or("golden fiber order missing")?.iter().map(|x| x.as_str().unwrap_or("").to_string()).collect();
        let rb = fiber_basis(&report["kinematic"], &fiber)?;
        let gb: Vec<Vec<Expr>> = gb.as_array().ok_or("fiber_basis must be an array")?.iter().map(exprs).collect::<Result<_, _>>()?;
        let f = chart_field(&report["kinematic"]["chart"])?;
        if !same_function_span(&rb, &gb, &f)? {
            diffs.push("kinematic fiber basis spans a different subspace than the golden basis".into());
        }
    }
    if let Some(gc) = golden.get("components") {
        let rc = exprs(&report["reduced"]["components"]).map_err(|e| format!("report components: {e}"))?;
        // golden components are written without the chart's identity rules, e.g. an
        // unreduced derivative of a constrained function
        let f = chart_field(&report["ansatz"]["chart"])?;
        let gc: Vec<Expr> = exprs(gc)?.iter().map(|e| f.norm(e)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        diffs.extend(same_constant_span(&rc, &gc)?);
    }
    if let Some(u) = golden.get("universal") {
        if report["universal"]["universal"] != *u {
            diffs.push(format!("universal {} vs golden {u}", report["universal"]["universal"]));
        }
    }
    if let Some(v) = golden.get("verdicts") {
        for (cand, want) in v.as_object().ok_or("verdicts must be an object")? {
            let got = report["residual"]
                .as_array()
                .and_then(|a| a.iter().find(|m| m["candidate"] == *cand))
                .map(|m| m["verdict"].clone())
                .unwrap_or(Value::Null);
            if got != *want {
                diffs.push(format!("residual candidate {cand}: {got} vs golden {want}"));
            }
        }
    }
    Ok(diffs)
}
