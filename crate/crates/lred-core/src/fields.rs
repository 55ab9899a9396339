//! Bundles, projectable vector fields, brackets, jets and prolongation.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::linalg::{solve_columns, Field};
use crate::symkernel::{derive_with, reduce_mod, Atom, AtomData, Expr, RuleSet, SymError, SymbolInfo, SymbolKind, SymbolTable};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("jet order {needed} exceeds the context order {order}")]
    OrderOverflow { needed: usize, order: usize },
    #[error("generator {name} is not admissible: {reason}")]
    Admissibility { name: String, reason: String },
    #[error("bracket [{a}, {b}] is not in the span of the generators")]
    NotClosed { a: String, b: String },
}

/// A chart: algebraic quantities with their derivatives, rules and sign conditions.
#[derive(Debug, Clone, Default)]
pub struct Chart {
    /// Rules defining algebraic quantities (e.g. `r^2 -> x^2 + y^2 + z^2`); always safe to apply.
    pub identity_rules: RuleSet,
    /// Rules cutting out a submanifold (e.g. a sphere); applied to results, never before differentiation.
    pub constraint_rules: RuleSet,
    /// Positive square roots of other chart expressions (e.g. `r` with square `x^2 + y^2 + z^2`).
    pub dependents: BTreeMap<String, Dependent>,
    /// Symbols declared positive.
    pub positive: Vec<String>,
    /// Sampling boxes per symbol.
    pub boxes: BTreeMap<String, (f64, f64)>,
}

/// A chart quantity defined as the positive root of `square`.
#[derive(Debug, Clone)]
pub struct Dependent {
    pub square: Expr,
    /// partial derivatives along the coordinates `square` mentions
    pub partials: BTreeMap<String, Expr>,
}

impl Chart {
    /// Declare `name = +sqrt(square)`; partials are `(d square / d c) / (2 name)`.
    pub fn add_dependent(&mut self, name: &str, square: Expr) -> Result<(), SymError> {
        let me = Expr::sym(name);
        let two_me = me.scale(&crate::symkernel::q_int(2));
        let mut partials = BTreeMap::new();
        for c in square.free_symbols() {
            let d = self.coord_partial(&square, &c)?;
            if !d.is_zero() {
                partials.insert(c, self.reduce_identity(&d.div(&two_me)?)?);
            }
        }
        self.dependents.insert(name.to_string(), Dependent { square, partials });
        if !self.positive.iter().any(|p| p == name) {
            self.positive.push(name.to_string());
        }
        Ok(())
    }

    pub fn all_rules(&self) -> Result<RuleSet, SymError> {
        self.identity_rules.union(&self.constraint_rules)
    }

    pub fn field(&self) -> Field {
        Field::new(self.all_rules().expect("validated at construction"))
    }

    pub fn identity_field(&self) -> Field {
        Field::new(self.identity_rules.clone())
    }

    pub fn reduce(&self, e: &Expr) -> Result<Expr, SymError> {
        reduce_mod(e, &self.all_rules()?)
    }

    pub fn reduce_identity(&self, e: &Expr) -> Result<Expr, SymError> {
        reduce_mod(e, &self.identity_rules)
    }

    /// Derivative of `e` along a coordinate, applying the chain rule through dependent
    /// symbols and application arguments.
    pub fn coord_partial(&self, e: &Expr, coord: &str) -> Result<Expr, SymError> {
        let d = derive_with(e, &mut |a: &Atom| self.atom_partial(a, coord));
        self.reduce_identity(&d)
    }

    fn atom_partial(&self, a: &Atom, coord: &str) -> Expr {
        match a.data() {
            AtomData::Sym(n) => {
                if n == coord {
                    Expr::one()
                } else if let Some(d) = self.dependents.get(n) {
                    d.partials.get(coord).cloned().unwrap_or_else(Expr::zero)
                } else {
                    Expr::zero()
                }
            }
            AtomData::App(app) => {
                let mut acc = Expr::zero();
                for (k, arg) in app.args.iter().enumerate() {
                    let da = derive_with(arg, &mut |b: &Atom| self.atom_partial(b, coord));
                    if !da.is_zero() {
                        acc = acc.add(&Expr::atom(a.derivative_in_slot(k as u32).expect("app")).mul(&da));
                    }
                }
                acc
            }
        }
    }
}

/// π: E → M in coordinates.
#[derive(Debug, Clone)]
pub struct BundleSpec {
    pub base: Vec<String>,
    pub fiber: Vec<String>,
    pub chart: Chart,
    pub table: SymbolTable,
}

impl BundleSpec {
    pub fn coords(&self) -> Vec<String> {
        self.base.iter().chain(self.fiber.iter()).cloned().collect()
    }

    pub fn is_base(&self, s: &str) -> bool {
        self.base.iter().any(|b| b == s)
    }

    pub fn is_fiber(&self, s: &str) -> bool {
        self.fiber.iter().any(|b| b == s)
    }

    /// Symbols whose values are functions of the base: base coordinates and dependent chart symbols.
    pub fn base_like(&self, s: &str) -> bool {
        self.is_base(s)
            || self.chart.dependents.get(s).map(|d| d.square.free_symbols().iter().all(|k| self.base_like(k))).unwrap_or(false)
    }

    /// Does `e` depend on base points only (no fiber or jet symbols anywhere)?
    pub fn is_base_expr(&self, e: &Expr) -> bool {
        e.free_symbols().iter().all(|s| {
            !self.is_fiber(s)
                && self.table.kind(s) != Some(SymbolKind::Jet)
                && self.chart.dependents.get(s).map(|d| self.is_base_expr(&d.square)).unwrap_or(true)
        })
    }
}

/// A derivation `sum coeffs[s] ∂/∂s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorField {
    pub name: String,
    pub coeffs: BTreeMap<String, Expr>,
}

impl VectorField {
    pub fn new(name: &str, coeffs: BTreeMap<String, Expr>) -> VectorField {
        let coeffs = coeffs.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        VectorField { name: name.to_string(), coeffs }
    }

    pub fn zero(name: &str) -> VectorField {
        VectorField { name: name.to_string(), coeffs: BTreeMap::new() }
    }

    pub fn coeff(&self, s: &str) -> Expr {
        self.coeffs.get(s).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|v| v.is_zero())
    }

    /// Projectable-affine gate: base coefficients depend on the base only, fiber
    /// coefficients are affine in the fiber with base-dependent coefficients.
    pub fn check_admissible(&self, b: &BundleSpec) -> Result<(), FieldError> {
        let bad = |reason: String| FieldError::Admissibility { name: self.name.clone(), reason };
        for (s, c) in &self.coeffs {
            if !b.is_base(s) && !b.is_fiber(s) {
                return Err(bad(format!("coefficient on `{s}`, which is not a bundle coordinate")));
            }
            if b.is_base(s) && !b.is_base_expr(c) {
                return Err(bad(format!("base coefficient on `{s}` depends on fiber coordinates")));
            }
            if b.is_fiber(s) {
                for u in &b.fiber {
                    let d = b.chart.coord_partial(c, u)?;
                    if !b.is_base_expr(&d) {
                        return Err(bad(format!("fiber coefficient on `{s}` is not affine in `{u}`")));
                    }
                }
                for a in c.applications() {
                    let app = a.as_app().expect("application");
                    if app.args.iter().any(|x| !b.is_base_expr(x)) {
                        return Err(bad(format!("fiber coefficient on `{s}` applies a function to fiber values")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn base_part(&self, b: &BundleSpec) -> VectorField {
        VectorField {
            name: self.name.clone(),
            coeffs: self.coeffs.iter().filter(|(s, _)| b.is_base(s)).map(|(s, c)| (s.clone(), c.clone())).collect(),
        }
    }

    pub fn scaled(&self, k: &Expr) -> VectorField {
        VectorField::new(&self.name, self.coeffs.iter().map(|(s, c)| (s.clone(), c.mul(k))).collect())
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        let mut c = self.coeffs.clone();
        for (s, v) in &o.coeffs {
            let n = c.get(s).cloned().unwrap_or_else(Expr::zero).add(v);
            c.insert(s.clone(), n);
        }
        VectorField::new(&self.name, c)
    }
}

/// V(e) with identity rules applied only (safe to differentiate further).
pub fn apply_raw(v: &VectorField, e: &Expr, chart: &Chart) -> Result<Expr, SymError> {
    let mut acc = Expr::zero();
    for (s, c) in &v.coeffs {
        let d = chart.coord_partial(e, s)?;
        if !d.is_zero() {
            acc = acc.add(&c.mul(&d));
        }
    }
    chart.reduce_identity(&acc)
}

/// V(e), simplified and reduced modulo every chart rule.
pub fn apply(v: &VectorField, e: &Expr, chart: &Chart) -> Result<Expr, SymError> {
    let r = apply_raw(v, e, chart)?;
    chart.reduce(&r)
}

/// [V, W] coefficient-wise: V(W^s) - W(V^s).
pub fn lie_bracket(v: &VectorField, w: &VectorField, chart: &Chart) -> Result<VectorField, SymError> {
    let mut keys: Vec<&String> = v.coeffs.keys().chain(w.coeffs.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut out = BTreeMap::new();
    for s in keys {
        let c = apply_raw(v, &w.coeff(s), chart)?.sub(&apply_raw(w, &v.coeff(s), chart)?);
        let c = chart.reduce_identity(&c)?;
        if !c.is_zero() {
            out.insert(s.clone(), c);
        }
    }
    Ok(VectorField { name: format!("[{},{}]", v.name, w.name), coeffs: out })
}

/// Is the field zero modulo all chart rules?
pub fn field_is_zero(v: &VectorField, chart: &Chart) -> Result<bool, SymError> {
    for c in v.coeffs.values() {
        if !chart.reduce(c)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct LieAlgebra {
    pub generators: Vec<VectorField>,
    /// (a, b) -> coefficients c_k with [V_a, V_b] = sum c_k V_k
    pub closure: BTreeMap<(usize, usize), Vec<Expr>>,
}

impl LieAlgebra {
    /// Check admissibility and closure; the closure table holds expression coefficients.
    pub fn new(generators: Vec<VectorField>, bundle: &BundleSpec) -> Result<LieAlgebra, FieldError> {
        for g in &generators {
            g.check_admissible(bundle)?;
        }
        let coords = bundle.coords();
        let field = bundle.chart.field();
        let cols: Vec<Vec<Expr>> = generators.iter().map(|g| coords.iter().map(|s| g.coeff(s)).collect()).collect();
        let mut closure = BTreeMap::new();
        for a in 0..generators.len() {
            for b in (a + 1)..generators.len() {
                let br = lie_bracket(&generators[a], &generators[b], &bundle.chart)?;
                let rhs: Vec<Expr> = coords.iter().map(|s| br.coeff(s)).collect();
                let extra: Vec<&String> = br.coeffs.keys().filter(|s| !coords.contains(s)).collect();
                if !extra.is_empty() {
                    return Err(FieldError::NotClosed { a: generators[a].name.clone(), b: generators[b].name.clone() });
                }
                match solve_columns(&cols, &rhs, &field)? {
                    Some(c) => {
                        closure.insert((a, b), c);
                    }
                    None => {
                        return Err(FieldError::NotClosed {
                            a: generators[a].name.clone(),
                            b: generators[b].name.clone(),
                        })
                    }
                }
            }
        }
        Ok(LieAlgebra { generators, closure })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Structure constants if every closure coefficient is a rational constant.
    pub fn structure_constants(&self) -> Option<BTreeMap<(usize, usize), Vec<Expr>>> {
        if self.closure.values().all(|c| c.iter().all(|x| x.is_const())) {
            Some(self.closure.clone())
        } else {
            None
        }
    }
}

/// Jet coordinates up to a fixed order over a chosen list of independent variables.
#[derive(Debug, Clone)]
pub struct JetContext {
    pub order: usize,
    pub independents: Vec<String>,
    pub dependents: Vec<String>,
    names: BTreeMap<(String, Vec<usize>), String>,
    back: BTreeMap<String, (String, Vec<usize>)>,
}

impl JetContext {
    /// Generate jet symbols `u_xy` (or `u_x1_x2` when some variable name is longer than one character).
    pub fn new(independents: &[String], dependents: &[String], order: usize) -> JetContext {
        let sep = if independents.iter().all(|s| s.len() == 1) { "" } else { "_" };
        let mut names = BTreeMap::new();
        let mut back = BTreeMap::new();
        for u in dependents {
            for idx in multi_indices(independents.len(), order) {
                if idx.is_empty() {
                    continue;
                }
                let parts: Vec<&str> = idx.iter().map(|i| independents[*i].as_str()).collect();
                let name = format!("{u}_{}", parts.join(sep));
                names.insert((u.clone(), idx.clone()), name.clone());
                back.insert(name, (u.clone(), idx));
            }
        }
        JetContext { order, independents: independents.to_vec(), dependents: dependents.to_vec(), names, back }
    }

    /// Name of the jet coordinate for `u` and a multi-index (positions into the independents, any order).
    pub fn name(&self, u: &str, idx: &[usize]) -> Option<String> {
        if idx.is_empty() {
            return Some(u.to_string());
        }
        let mut k = idx.to_vec();
        k.sort_unstable();
        self.names.get(&(u.to_string(), k)).cloned()
    }

    pub fn lookup(&self, name: &str) -> Option<(String, Vec<usize>)> {
        if self.dependents.iter().any(|d| d == name) {
            return Some((name.to_string(), Vec::new()));
        }
        self.back.get(name).cloned()
    }

    /// All jet symbols in a fixed order: by dependent variable, then order, then index.
    pub fn symbols(&self) -> Vec<String> {
        let mut v: Vec<(&String, &Vec<usize>, &String)> = self.names.iter().map(|((u, i), n)| (u, i, n)).collect();
        let pos = |u: &String| self.dependents.iter().position(|d| d == u).unwrap_or(0);
        v.sort_by(|a, b| (pos(a.0), a.1.len(), a.1).cmp(&(pos(b.0), b.1.len(), b.1)));
        v.into_iter().map(|(_, _, n)| n.clone()).collect()
    }

    pub fn declare(&self, table: &mut SymbolTable) {
        for (name, (u, idx)) in &self.back {
            let names: Vec<String> = idx.iter().map(|i| self.independents[*i].clone()).collect();
            table.declare_info(SymbolInfo { name: name.clone(), kind: SymbolKind::Jet, jet: Some((u.clone(), names)) });
        }
    }

    /// Total derivative along independent variable `x`:
    /// ∂e/∂x + sum over jet symbols u_I in e of u_{I,x} ∂e/∂u_I.
    pub fn total_derivative(&self, e: &Expr, x: &str, chart: &Chart) -> Result<Expr, FieldError> {
        let xi = match self.independents.iter().position(|s| s == x) {
            Some(i) => i,
            None => return Ok(chart.coord_partial(e, x)?),
        };
        let mut overflow = None;
        let d = derive_with(e, &mut |a: &Atom| match a.data() {
            AtomData::Sym(n) => {
                if let Some((u, idx)) = self.lookup(n) {
                    let mut k = idx.clone();
                    k.push(xi);
                    match self.name(&u, &k) {
                        Some(nm) => Expr::sym(&nm),
                        None => {
                            overflow = Some(k.len());
                            Expr::zero()
                        }
                    }
                } else if n == x {
                    Expr::one()
                } else if let Some(dd) = chart.dependents.get(n) {
                    dd.partials.get(x).cloned().unwrap_or_else(Expr::zero)
                } else {
                    Expr::zero()
                }
            }
            AtomData::App(_) => chart.atom_partial(a, x),
        });
        if let Some(needed) = overflow {
            return Err(FieldError::OrderOverflow { needed, order: self.order });
        }
        Ok(chart.reduce_identity(&d)?)
    }

    /// Prolongation of a projectable field: coefficient of u_{I,i} is
    /// D_i φ^I - sum_j (D_i ξ^j) u_{I,j}, with φ^∅ = η.
    pub fn prolong_field(&self, v: &VectorField, chart: &Chart) -> Result<VectorField, FieldError> {
        let mut coeffs = v.coeffs.clone();
        let xi: Vec<Expr> = self.independents.iter().map(|s| v.coeff(s)).collect();
        let mut dxi: Vec<Vec<Expr>> = Vec::new();
        for i in &self.independents {
            let mut row = Vec::new();
            for x in &xi {
                row.push(chart.coord_partial(x, i)?);
            }
            dxi.push(row);
        }
        for u in &self.dependents {
            let mut level: Vec<(Vec<usize>, Expr)> = vec![(Vec::new(), v.coeff(u))];
            for _ in 0..self.order {
                let mut next: BTreeMap<Vec<usize>, Expr> = BTreeMap::new();
                for (idx, phi) in &level {
                    for i in 0..self.independents.len() {
                        let mut k = idx.clone();
                        k.push(i);
                        k.sort_unstable();
                        if next.contains_key(&k) {
                            continue;
                        }
                        let mut c = self.total_derivative(phi, &self.independents[i], chart)?;
                        for (j, d) in dxi[i].iter().enumerate() {
                            if d.is_zero() {
                                continue;
                            }
                            let mut kj = idx.clone();
                            kj.push(j);
                            let name = self
                                .name(u, &kj)
                                .ok_or(FieldError::OrderOverflow { needed: kj.len(), order: self.order })?;
                            c = c.sub(&d.mul(&Expr::sym(&name)));
                        }
                        next.insert(k, chart.reduce_identity(&c)?);
                    }
                }
                for (k, c) in &next {
                    if !c.is_zero() {
                        coeffs.insert(self.name(u, k).expect("within order"), c.clone());
                    }
                }
                level = next.into_iter().collect();
            }
        }
        Ok(VectorField { name: v.name.clone(), coeffs })
    }
}

/// Multi-indices (sorted, with repetition) of length 0..=order over n variables.
pub fn multi_indices(n: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut level = vec![Vec::new()];
    for _ in 0..order {
        let mut next = Vec::new();
        for idx in &level {
            let start = idx.last().copied().unwrap_or(0);
            for i in start..n {
                let mut k: Vec<usize> = idx.clone();
                k.push(i);
                next.push(k);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

/// Per-algebra cache of prolongations by order, safe to share across threads.
#[derive(Debug, Default, Clone)]
pub struct ProlongationCache {
    inner: Arc<Mutex<BTreeMap<(String, usize), VectorField>>>,
}

impl ProlongationCache {
    pub fn get_or_compute(&self, v: &VectorField, jc: &JetContext, chart: &Chart) -> Result<VectorField, FieldError> {
        let key = (format!("{}|{:?}", v.name, v.coeffs), jc.order);
        if let Some(f) = self.inner.lock().expect("cache lock").get(&key) {
            return Ok(f.clone());
        }
        let f = jc.prolong_field(v, chart)?;
        self.inner.lock().expect("cache lock").insert(key, f.clone());
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::ex;

    fn vf(pairs: &[(&str, &str)]) -> VectorField {
        VectorField::new("V", pairs.iter().map(|(s, c)| (s.to_string(), ex(c))).collect())
    }

    #[test]
    fn rotation_annihilates_radius() {
        let c = Chart::default();
        let v = vf(&[("y", "x"), ("x", "-y")]);
        assert!(apply(&v, &ex("x^2 + y^2"), &c).unwrap().is_zero());
        assert!(apply(&VectorField::zero("0"), &ex("x*y"), &c).unwrap().is_zero());
    }

    #[test]
    fn first_prolongation_of_rotation() {
        let c = Chart::default();
        let jc = JetContext::new(&["x".into(), "y".into()], &["u".into()], 1);
        let v = vf(&[("y", "x"), ("x", "-y")]);
        let p = jc.prolong_field(&v, &c).unwrap();
        // u_x -> -u_y * (d/dx of y-coefficient) = -u_y ; u_y -> u_x
        assert_eq!(p.coeff("u_x"), ex("-u_y"));
        assert_eq!(p.coeff("u_y"), ex("u_x"));
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(3, 2).len(), 1 + 3 + 6);
    }
}
