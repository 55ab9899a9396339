//! Kinematic reduction: transversality ranks, isotropy constraints, the exact
//! solve for the kinematic fiber, residual generators and invariants.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::fields::{apply, apply_raw, BundleSpec, Chart, FieldError, LieAlgebra, VectorField};
use crate::linalg::{left_null_space, primitive_vector, rank, solve_columns, Echelon, Field, SparseRow};
use crate::numcheck::{ChartSampler, NumError, SamplePlan, MAX_DRAWS};
use crate::problem::{DiscreteMap, Hints, Problem};
use crate::symkernel::{lcm, substitute, Atom, AtomData, Expr, Mono, Poly, RewriteRule, RuleSet, SymError, SymbolKind, Q};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum KinematicError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("the kinematic bundle is empty: the isotropy constraints are inconsistent")]
    EmptyKinematic { certificate: Vec<Expr>, constraints: Vec<Expr> },
    #[error("constraint rank jumps between sample points ({first} vs {second})")]
    RankJump { first: usize, second: usize },
    #[error("{generator} is not tangent to the kinematic bundle")]
    NotTangent { generator: String },
    #[error("found {found} independent {kind} invariants, expected {expected}; raise the degree bound or supply hints")]
    InsufficientInvariants { kind: String, found: usize, expected: usize },
    #[error("hint `{name}` is not an invariant: {reason}")]
    BadHint { name: String, reason: String },
}

/// Exact evaluation at a rational point: free symbols become rationals, dependent and
/// constraint-ruled symbols stay symbolic with their rules evaluated at the point.
#[derive(Debug, Clone)]
pub struct ExactPoint {
    pub values: BTreeMap<String, Expr>,
    pub field: Field,
    /// chart rules applied before substitution, while derivative atoms still have symbol arguments
    pre: RuleSet,
}

impl ExactPoint {
    pub fn new(chart: &Chart, vals: &BTreeMap<String, Q>) -> Result<ExactPoint, SymError> {
        let values: BTreeMap<String, Expr> = vals.iter().map(|(k, v)| (k.clone(), Expr::constant(v.clone()))).collect();
        let mut rules = RuleSet::new();
        for r in chart.identity_rules.rules().iter().chain(chart.constraint_rules.rules()) {
            let lhs = substitute(&Expr::atom(r.lhs.clone()), &values)?;
            let a = match lhs.as_atom() {
                Some(a) if a.as_app().map(|x| x.deriv.is_empty() || x.args.iter().all(|y| y.as_sym().is_some())).unwrap_or(true) => a.clone(),
                // derivative rules at numeric arguments are applied before substitution
                _ => continue,
            };
            if rules.rule_for(&a).is_some() {
                continue;
            }
            let rhs = crate::symkernel::reduce_mod(&substitute(&r.rhs, &values)?, &rules)?;
            rules.push(RewriteRule::new(a, r.power, rhs)?)?;
        }
        for (name, d) in &chart.dependents {
            let a = Atom::sym(name);
            if values.contains_key(name) || rules.rule_for(&a).is_some() {
                continue;
            }
            let rhs = crate::symkernel::reduce_mod(&substitute(&d.square, &values)?, &rules)?;
            rules.push(RewriteRule::new(a, 2, rhs)?)?;
        }
        Ok(ExactPoint { values, field: Field::new(rules), pre: chart.all_rules()? })
    }

    pub fn eval(&self, e: &Expr) -> Result<Expr, SymError> {
        let e = crate::symkernel::reduce_mod(e, &self.pre)?;
        self.field.norm(&substitute(&e, &self.values)?)
    }

    pub fn rank(&self, rows: &[Vec<Expr>]) -> Result<usize, SymError> {
        let m: Vec<Vec<Expr>> = rows.iter().map(|r| r.iter().map(|x| self.eval(x)).collect()).collect::<Result<_, _>>()?;
        rank(&m, &self.field)
    }

    pub fn display(&self) -> BTreeMap<String, String> {
        self.values.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
    }
}

/// Symbols to draw for exact or numeric samples of the given expressions.
pub fn sample_symbols(bundle: &BundleSpec, exprs: &[&Expr]) -> Vec<String> {
    let mut s: BTreeSet<String> = bundle.coords().into_iter().collect();
    for e in exprs {
        s.extend(e.free_symbols());
    }
    s.into_iter().collect()
}

pub fn sample_plan(chart: &Chart, seed: u64, count: usize) -> SamplePlan {
    SamplePlan::new(seed, count).with_boxes(&chart.boxes)
}

/// Draw exact points until `accept` holds; ChartDegenerate after MAX_DRAWS.
pub fn find_point<F>(bundle: &BundleSpec, exprs: &[&Expr], seed: u64, mut accept: F) -> Result<ExactPoint, KinematicError>
where
    F: FnMut(&ExactPoint) -> Result<bool, SymError>,
{
    let plan = sample_plan(&bundle.chart, seed, 1);
    let syms = sample_symbols(bundle, exprs);
    let mut sampler = ChartSampler::new(&bundle.chart, &syms, &BTreeMap::new(), vec![], &plan, &());
    for _ in 0..MAX_DRAWS {
        let q = sampler.rational_point();
        let p = match ExactPoint::new(&bundle.chart, &q) {
            Ok(p) => p,
            Err(_) => continue,
        };
        match accept(&p) {
            Ok(true) => return Ok(p),
            Ok(false) | Err(SymError::DivisionByZero) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(NumError::ChartDegenerate(MAX_DRAWS).into())
}

#[derive(Debug, Clone)]
pub struct TransversalityReport {
    pub rank_base: usize,
    pub rank_total: usize,
    pub holds: bool,
    pub generators: usize,
    /// a rational point where both ranks are attained
    pub witness: BTreeMap<String, String>,
}

pub fn base_matrix(alg: &LieAlgebra, bundle: &BundleSpec) -> Vec<Vec<Expr>> {
    alg.generators.iter().map(|g| bundle.base.iter().map(|s| g.coeff(s)).collect()).collect()
}

pub fn full_matrix(alg: &LieAlgebra, bundle: &BundleSpec) -> Vec<Vec<Expr>> {
    let coords = bundle.coords();
    alg.generators.iter().map(|g| coords.iter().map(|s| g.coeff(s)).collect()).collect()
}

pub fn transversality_report(alg: &LieAlgebra, bundle: &BundleSpec, seed: u64) -> Result<TransversalityReport, KinematicError> {
    let f = bundle.chart.field();
    let xi = base_matrix(alg, bundle);
    let full = full_matrix(alg, bundle);
    let rank_base = rank(&xi, &f)?;
    let rank_total = rank(&full, &f)?;
    let entries: Vec<&Expr> = full.iter().flatten().collect();
    let p = find_point(bundle, &entries, seed, |p| Ok(p.rank(&xi)? == rank_base && p.rank(&full)? == rank_total))?;
    Ok(TransversalityReport {
        rank_base,
        rank_total,
        holds: rank_base == rank_total,
        generators: alg.len(),
        witness: p.display(),
    })
}

#[derive(Debug, Clone)]
pub struct IsotropyConstraintSet {
    /// combinations of generators whose base parts vanish
    pub combos: Vec<Vec<Expr>>,
    pub constraints: Vec<Expr>,
    pub discrete: Vec<Expr>,
}

impl IsotropyConstraintSet {
    pub fn all(&self) -> Vec<Expr> {
        self.constraints.iter().chain(self.discrete.iter()).cloned().collect()
    }
}

pub fn isotropy_constraints(
    alg: &LieAlgebra,
    bundle: &BundleSpec,
    discrete: &[DiscreteMap],
) -> Result<IsotropyConstraintSet, KinematicError> {
    let f = bundle.chart.field();
    let xi = base_matrix(alg, bundle);
    let mut combos = Vec::new();
    let mut constraints = Vec::new();
    for k in left_null_space(&xi, bundle.base.len(), &f)? {
        let k = primitive_vector(&k, &f)?;
        for u in &bundle.fiber {
            let mut c = Expr::zero();
            for (phi, g) in k.iter().zip(&alg.generators) {
                c = c.add(&phi.mul(&g.coeff(u)));
            }
            let c = bundle.chart.reduce(&c)?;
            if !c.is_zero() {
                constraints.push(c);
            }
        }
        combos.push(k);
    }
    let mut disc = Vec::new();
    for d in discrete {
        for u in &bundle.fiber {
            let img = d.image.get(u).cloned().unwrap_or_else(|| Expr::sym(u));
            let c = bundle.chart.reduce(&img.sub(&Expr::sym(u)))?;
            if !c.is_zero() {
                disc.push(c);
            }
        }
    }
    Ok(IsotropyConstraintSet { combos, constraints, discrete: disc })
}

/// The solved kinematic bundle in coordinates (base, v).
#[derive(Debug, Clone)]
pub struct KinematicBundle {
    pub fiber_names: Vec<String>,
    /// u -> ι(x, v)
    pub inclusion: BTreeMap<String, Expr>,
    pub fiber_dim: usize,
    pub constraint_rank: usize,
    /// base coordinates plus the new fiber coordinates, with rules carried over
    pub bundle: BundleSpec,
    /// dependent symbols resolved to roots on the kinematic bundle
    pub root_bindings: BTreeMap<String, Expr>,
    /// rules on the new fiber coordinates inherited from fiber constraints
    pub reduced_rules: RuleSet,
    pub residual: Vec<VectorField>,
    pub residual_transversal: bool,
}

impl KinematicBundle {
    /// Substitute the inclusion (and resolved roots) into an expression over the original bundle.
    pub fn restrict(&self, e: &Expr) -> Result<Expr, SymError> {
        let mut b = self.inclusion.clone();
        for (k, v) in &self.root_bindings {
            b.insert(k.clone(), v.clone());
        }
        let e = substitute(e, &b)?;
        self.bundle.chart.reduce(&e)
    }
}

/// Solve the affine isotropy system; `names` renames the free parameters.
pub fn solve_kinematic_fiber(
    cs: &IsotropyConstraintSet,
    bundle: &BundleSpec,
    names: &[String],
    seed: u64,
) -> Result<(Vec<String>, BTreeMap<String, Expr>, usize), KinematicError> {
    let f = bundle.chart.field();
    let n = bundle.fiber.len();
    let all = cs.all();
    let zero: BTreeMap<String, Expr> = bundle.fiber.iter().map(|u| (u.clone(), Expr::zero())).collect();
    let mut a_rows: Vec<Vec<Expr>> = Vec::new();
    let mut b: Vec<Expr> = Vec::new();
    for c in &all {
        let row: Vec<Expr> =
            bundle.fiber.iter().map(|u| bundle.chart.coord_partial(c, u)).collect::<Result<_, _>>()?;
        a_rows.push(row);
        b.push(f.norm(&substitute(c, &zero)?)?);
    }
    let mut ech = Echelon::new();
    for (row, c0) in a_rows.iter().zip(&b) {
        let mut r: SparseRow = row.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(j, x)| (j, x.clone())).collect();
        if !c0.is_zero() {
            r.insert(n, c0.clone());
        }
        ech.insert(&r, &f)?;
    }
    if ech.rows.contains_key(&n) {
        let mut certificate = Vec::new();
        for y in left_null_space(&a_rows, n, &f)? {
            let mut s = Expr::zero();
            for (yk, bk) in y.iter().zip(&b) {
                s = s.add(&yk.mul(bk));
            }
            if !f.is_zero(&s)? {
                certificate = primitive_vector(&y, &f)?;
                break;
            }
        }
        return Err(KinematicError::EmptyKinematic { certificate, constraints: all });
    }
    let generic = ech.rank();
    if !a_rows.is_empty() {
        let entries: Vec<&Expr> = a_rows.iter().flatten().collect();
        let mut ranks = Vec::new();
        for s in 0..2u64 {
            let p = find_point(bundle, &entries, seed.wrapping_add(1000 + s), |_| Ok(true))?;
            ranks.push(p.rank(&a_rows)?);
        }
        if ranks[0] != ranks[1] {
            return Err(KinematicError::RankJump { first: ranks[0], second: ranks[1] });
        }
    }
    let mut particular = vec![Expr::zero(); n];
    for (p, r) in &ech.rows {
        if let Some(v) = r.get(&n) {
            particular[*p] = v.neg();
        }
    }
    let basis: Vec<Vec<Expr>> =
        ech.null_space(n).into_iter().map(|(_, v)| primitive_vector(&v, &f)).collect::<Result<_, _>>()?;
    let dim = basis.len();
    let names: Vec<String> = if names.len() == dim {
        names.to_vec()
    } else if dim == n && all.is_empty() {
        bundle.fiber.clone()
    } else {
        (1..=dim).map(|i| format!("v{i}")).collect()
    };
    let mut inclusion = BTreeMap::new();
    for (alpha, u) in bundle.fiber.iter().enumerate() {
        let mut e = particular[alpha].clone();
        for (v, bvec) in names.iter().zip(&basis) {
            e = e.add(&bvec[alpha].mul(&Expr::sym(v)));
        }
        inclusion.insert(u.clone(), bundle.chart.reduce(&e)?);
    }
    Ok((names, inclusion, generic))
}

/// Square root of `e` as `sqrt(c) * m` when `e = c m^2` with c a rational square and m a
/// monomial in positive symbols.
pub fn positive_root(e: &Expr, positive: &[String]) -> Option<Expr> {
    if !e.is_poly() || e.num().len() != 1 {
        return None;
    }
    let (m, c) = &e.num().terms()[0];
    let rc = rational_sqrt(c)?;
    let mut half = Vec::new();
    for (a, k) in &m.0 {
        let s = a.as_sym()?;
        if k % 2 != 0 || !positive.iter().any(|p| p == s) {
            return None;
        }
        half.push((a.clone(), k / 2));
    }
    Some(Expr::from_poly(Poly::term(Mono(half), rc)))
}

fn rational_sqrt(q: &Q) -> Option<Q> {
    use num_traits::Signed;
    if q.is_negative() {
        return None;
    }
    let (n, d) = (q.numer(), q.denom());
    let (rn, rd) = (n.sqrt(), d.sqrt());
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        Some(Q::new(rn, rd))
    } else {
        None
    }
}

/// Build the kinematic bundle: inclusion, chart on (x, v), derived rules and residual generators.
pub fn build_kinematic_bundle(
    alg: &LieAlgebra,
    bundle: &BundleSpec,
    cs: &IsotropyConstraintSet,
    hints: &Hints,
    seed: u64,
) -> Result<KinematicBundle, KinematicError> {
    let (names, inclusion, constraint_rank) = solve_kinematic_fiber(cs, bundle, &hints.fiber_names, seed)?;
    let fiber_dim = names.len();
    let mut chart = bundle.chart.clone();
    // fiber-valued dependents: resolve to a root or re-express on the kinematic bundle
    let mut root_bindings = BTreeMap::new();
    let fiber_deps: Vec<String> = chart
        .dependents
        .iter()
        .filter(|(_, d)| d.square.free_symbols().iter().any(|s| bundle.is_fiber(s)))
        .map(|(k, _)| k.clone())
        .collect();
    for d in fiber_deps {
        let sq = chart.dependents[&d].square.clone();
        chart.dependents.remove(&d);
        let sq = chart.reduce(&substitute(&sq, &inclusion)?)?;
        match positive_root(&sq, &chart.positive) {
            Some(root) => {
                root_bindings.insert(d, root);
            }
            None => chart.add_dependent(&d, sq)?,
        }
    }
    // fiber constraint rules become rules on the new coordinates
    let mut reduced_rules = RuleSet::new();
    let fiber_rules: Vec<RewriteRule> = chart
        .constraint_rules
        .rules()
        .iter()
        .filter(|r| r.lhs.as_sym().map(|s| bundle.is_fiber(s)).unwrap_or(false))
        .cloned()
        .collect();
    let mut kept = RuleSet::new();
    for r in chart.constraint_rules.rules() {
        if !fiber_rules.contains(r) {
            kept.push(r.clone())?;
        }
    }
    chart.constraint_rules = kept;
    for r in &fiber_rules {
        let lhs = substitute(&Expr::atom(r.lhs.clone()).pow(r.power as i64)?, &inclusion)?;
        let h = chart.reduce(&lhs.sub(&substitute(&r.rhs, &inclusion)?))?;
        if h.is_zero() {
            continue;
        }
        if let Some(rule) = solve_for_power(&h, &names) {
            reduced_rules.push(rule)?;
        }
    }
    chart.constraint_rules.extend(&reduced_rules)?;
    let mut table = bundle.table.clone();
    for v in &names {
        if table.kind(v).is_none() {
            table.declare(v, SymbolKind::ReducedFiber);
        }
    }
    let kb_bundle = BundleSpec { base: bundle.base.clone(), fiber: names.clone(), chart, table };
    let mut kb = KinematicBundle {
        fiber_names: names,
        inclusion,
        fiber_dim,
        constraint_rank,
        bundle: kb_bundle,
        root_bindings,
        reduced_rules,
        residual: Vec::new(),
        residual_transversal: true,
    };
    let mut residual = Vec::new();
    for g in &alg.generators {
        residual.push(restrict_field(g, bundle, &kb)?);
    }
    let f = kb.bundle.chart.field();
    let xi: Vec<Vec<Expr>> = residual.iter().map(|g| kb.bundle.base.iter().map(|s| g.coeff(s)).collect()).collect();
    let full: Vec<Vec<Expr>> = residual.iter().map(|g| kb.bundle.coords().iter().map(|s| g.coeff(s)).collect()).collect();
    kb.residual_transversal = rank(&xi, &f)? == rank(&full, &f)?;
    kb.residual = residual;
    Ok(kb)
}

/// A rule `v^k -> rest / c` from `h = c v^k + rest` (k = 1, 2, c rational), taking the last such v.
fn solve_for_power(h: &Expr, names: &[String]) -> Option<RewriteRule> {
    if !h.is_poly() {
        return None;
    }
    for v in names.iter().rev() {
        let a = Atom::sym(v);
        let coeffs = h.num().coeffs_in(&a);
        let top = *coeffs.keys().max()?;
        if top == 0 || top > 2 || coeffs.len() != 2 || !coeffs.contains_key(&0) {
            continue;
        }
        let c = match coeffs[&top].const_value() {
            Some(c) => c,
            None => continue,
        };
        let rest = Expr::from_poly(coeffs[&0].clone()).scale(&(-Q::from_integer(1.into()) / c));
        if let Ok(r) = RewriteRule::new(a, top, rest) {
            return Some(r);
        }
    }
    None
}

/// Rewrite a generator of the original bundle on the kinematic bundle by solving
/// `sum_a ∂ι/∂v^a η̃^a = η(x, ι) - ξ(ι)`.
pub fn restrict_field(g: &VectorField, bundle: &BundleSpec, kb: &KinematicBundle) -> Result<VectorField, KinematicError> {
    let chart = &kb.bundle.chart;
    let f = chart.field();
    let mut rhs = Vec::new();
    for u in &bundle.fiber {
        let iota = &kb.inclusion[u];
        let mut r = kb.restrict(&g.coeff(u))?;
        for x in &bundle.base {
            let c = g.coeff(x);
            if !c.is_zero() {
                r = r.sub(&c.mul(&chart.coord_partial(iota, x)?));
            }
        }
        rhs.push(f.norm(&r)?);
    }
    let cols: Vec<Vec<Expr>> = kb
        .fiber_names
        .iter()
        .map(|v| bundle.fiber.iter().map(|u| chart.coord_partial(&kb.inclusion[u], v)).collect())
        .collect::<Result<_, _>>()?;
    let eta = solve_columns(&cols, &rhs, &f)?.ok_or_else(|| KinematicError::NotTangent { generator: g.name.clone() })?;
    let mut coeffs: BTreeMap<String, Expr> =
        bundle.base.iter().map(|x| (x.clone(), g.coeff(x))).filter(|(_, c)| !c.is_zero()).collect();
    for (v, e) in kb.fiber_names.iter().zip(eta) {
        if !e.is_zero() {
            coeffs.insert(v.clone(), e);
        }
    }
    Ok(VectorField::new(&g.name, coeffs))
}

/// Splits atoms into coefficient atoms (annihilated by every field) and active ones.
pub struct Annihilator<'a> {
    pub fields: &'a [VectorField],
    pub chart: &'a Chart,
    memo: RefCell<BTreeMap<Atom, bool>>,
}

impl<'a> Annihilator<'a> {
    pub fn new(fields: &'a [VectorField], chart: &'a Chart) -> Annihilator<'a> {
        Annihilator { fields, chart, memo: RefCell::new(BTreeMap::new()) }
    }

    pub fn is_coefficient(&self, a: &Atom) -> Result<bool, SymError> {
        if let Some(b) = self.memo.borrow().get(a) {
            return Ok(*b);
        }
        let e = Expr::atom(a.clone());
        let mut ok = true;
        for v in self.fields {
            if !self.chart.reduce(&apply_raw(v, &e, self.chart)?)?.is_zero() {
                ok = false;
                break;
            }
        }
        self.memo.borrow_mut().insert(a.clone(), ok);
        Ok(ok)
    }

    pub fn is_coefficient_expr(&self, e: &Expr) -> Result<bool, SymError> {
        for a in e.atoms() {
            if !self.is_coefficient(&a)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn annihilates(&self, e: &Expr) -> Result<bool, SymError> {
        for v in self.fields {
            if !apply(v, e, self.chart)?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Monomials of degree lo..=hi in the atoms, skipping multiples of ruled powers.
pub fn monomials(atoms: &[Atom], lo: u32, hi: u32, rules: &RuleSet) -> Vec<Mono> {
    let mut out = vec![Mono::one()];
    let mut level = vec![(Mono::one(), 0usize)];
    for _ in 0..hi {
        let mut next = Vec::new();
        for (m, start) in &level {
            for (i, a) in atoms.iter().enumerate().skip(*start) {
                let nm = m.mul(&Mono::var(a.clone(), 1));
                let blocked = rules.rules().iter().any(|r| nm.exp(&r.lhs) >= r.power);
                if !blocked {
                    next.push((nm, i));
                }
            }
        }
        out.extend(next.iter().map(|(m, _)| m.clone()));
        level = next;
    }
    let mut out: Vec<Mono> = out.into_iter().filter(|m| m.degree() >= lo).collect();
    out.sort();
    out.dedup();
    out
}

/// Linear rows over the coefficient field for undetermined-coefficient equations.
///
/// Each equation is the list of expressions multiplying the unknowns; it must hold
/// identically in the active atoms, so it splits into one row per active monomial.
pub fn undetermined_rows(eqs: &[Vec<Expr>], ann: &Annihilator, f: &Field) -> Result<Vec<SparseRow>, SymError> {
    let mut rows = Vec::new();
    for eq in eqs {
        let mut terms: Vec<Expr> = eq.iter().map(|e| f.norm(e)).collect::<Result<_, _>>()?;
        for _ in 0..4 {
            let mut l = Poly::one();
            for t in &terms {
                if !t.is_zero() && !ann.is_coefficient_expr(&Expr::from_poly(t.den().clone()))? {
                    l = lcm(&l, t.den());
                }
            }
            if l.is_one() {
                break;
            }
            let le = Expr::from_poly(l);
            terms = terms.iter().map(|t| f.norm(&t.mul(&le))).collect::<Result<_, _>>()?;
        }
        let mut by_mono: BTreeMap<Mono, SparseRow> = BTreeMap::new();
        for (j, t) in terms.iter().enumerate() {
            if t.is_zero() {
                continue;
            }
            let den = Expr::from_poly(t.den().clone());
            let mut parts: BTreeMap<Mono, Vec<(Mono, Q)>> = BTreeMap::new();
            for (m, c) in t.num().terms() {
                let mut act = Vec::new();
                let mut rest = Vec::new();
                for (a, k) in &m.0 {
                    if ann.is_coefficient(a)? {
                        rest.push((a.clone(), *k));
                    } else {
                        act.push((a.clone(), *k));
                    }
                }
                parts.entry(Mono(act)).or_default().push((Mono(rest), c.clone()));
            }
            for (mu, ts) in parts {
                let k = Expr::from_poly(Poly::from_terms(ts)).div(&den)?;
                by_mono.entry(mu).or_default().insert(j, k);
            }
        }
        rows.extend(by_mono.into_values());
    }
    Ok(rows)
}

/// Null space of the stacked rows over `n` unknowns, in free-column order.
pub fn solve_undetermined(rows: &[SparseRow], n: usize, f: &Field) -> Result<Vec<Vec<Expr>>, SymError> {
    let mut e = Echelon::new();
    for r in rows {
        e.insert(r, f)?;
    }
    e.null_space(n).into_iter().map(|(_, v)| primitive_vector(&v, f)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// a coordinate annihilated by every generator
    Coordinate,
    Hint,
    Computed(u32),
}

#[derive(Debug, Clone)]
pub struct Invariant {
    pub name: String,
    pub expr: Expr,
    pub provenance: Provenance,
}

#[derive(Debug, Clone)]
pub struct InvariantSet {
    pub base: Vec<Invariant>,
    pub fiber: Vec<Invariant>,
    pub expected_base: usize,
    pub expected_fiber: usize,
}

impl InvariantSet {
    pub fn base_exprs(&self) -> Vec<Expr> {
        self.base.iter().map(|i| i.expr.clone()).collect()
    }
}

/// Keeps candidates whose gradient along `coords` raises the rank.
struct IndependenceFilter<'a> {
    coords: Vec<String>,
    chart: &'a Chart,
    field: Field,
    ech: Echelon,
}

impl<'a> IndependenceFilter<'a> {
    fn new(coords: Vec<String>, chart: &'a Chart) -> IndependenceFilter<'a> {
        IndependenceFilter { coords, chart, field: chart.field(), ech: Echelon::new() }
    }

    fn offer(&mut self, e: &Expr) -> Result<bool, SymError> {
        let row: SparseRow = self
            .coords
            .iter()
            .enumerate()
            .map(|(j, c)| Ok((j, self.chart.coord_partial(e, c)?)))
            .collect::<Result<Vec<_>, SymError>>()?
            .into_iter()
            .filter(|(_, x)| !x.is_zero())
            .collect();
        Ok(self.ech.insert(&row, &self.field)?.is_some())
    }
}

fn default_name(e: &Expr, i: usize, prefix: &str) -> String {
    e.as_sym().map(|s| s.to_string()).unwrap_or_else(|| format!("{prefix}{}", i + 1))
}

pub fn compute_invariants(
    kb: &KinematicBundle,
    rank_base: usize,
    hints: &Hints,
    max_degree: u32,
) -> Result<InvariantSet, KinematicError> {
    let b = &kb.bundle;
    let chart = &b.chart;
    let ann = Annihilator::new(&kb.residual, chart);
    let f = chart.field();
    let rules = chart.all_rules()?;
    let base_rules = chart
        .constraint_rules
        .rules()
        .iter()
        .filter(|r| r.lhs.as_sym().map(|s| b.is_base(s)).unwrap_or(false))
        .count();
    let expected_base = b.base.len().saturating_sub(base_rules + rank_base);

    // base
    let mut base = Vec::new();
    let mut filt = IndependenceFilter::new(b.base.clone(), chart);
    let base_like: Vec<String> = b
        .base
        .iter()
        .cloned()
        .chain(chart.dependents.keys().filter(|d| b.base_like(d)).cloned())
        .collect();
    for s in &base_like {
        if base.len() >= expected_base {
            break;
        }
        let e = Expr::sym(s);
        if ann.is_coefficient(&Atom::sym(s))? && filt.offer(&e)? {
            base.push(Invariant { name: s.clone(), expr: e, provenance: Provenance::Coordinate });
        }
    }
    for (i, h) in hints.base_invariants.iter().enumerate() {
        if !ann.annihilates(h)? {
            return Err(KinematicError::BadHint { name: h.to_string(), reason: "not annihilated by the generators".into() });
        }
        if base.len() < expected_base && filt.offer(h)? {
            base.push(Invariant { name: default_name(h, i, "s"), expr: h.clone(), provenance: Provenance::Hint });
        }
    }
    if base.len() < expected_base {
        let mut active = Vec::new();
        for s in &base_like {
            let a = Atom::sym(s);
            if !ann.is_coefficient(&a)? {
                active.push(a);
            }
        }
        let monos = monomials(&active, 1, max_degree, &rules);
        let terms: Vec<Expr> = monos.iter().map(|m| Expr::from_poly(Poly::term(m.clone(), Q::from_integer(1.into())))).collect();
        let eqs: Vec<Vec<Expr>> = kb
            .residual
            .iter()
            .map(|v| terms.iter().map(|t| apply_raw(v, t, chart)).collect())
            .collect::<Result<_, _>>()?;
        let rows = undetermined_rows(&eqs, &ann, &f)?;
        for sol in solve_undetermined(&rows, terms.len(), &f)? {
            if base.len() >= expected_base {
                break;
            }
            let e = combine(&sol, &terms, &f)?;
            if filt.offer(&e)? {
                let i = base.len();
                base.push(Invariant { name: format!("s{}", i + 1), expr: e.clone(), provenance: Provenance::Computed(e.degree()) });
            }
        }
    }
    if base.len() < expected_base {
        return Err(KinematicError::InsufficientInvariants { kind: "base".into(), found: base.len(), expected: expected_base });
    }

    // fiber
    let expected_fiber = kb.fiber_dim;
    let mut fiber = Vec::new();
    let mut vfilt = IndependenceFilter::new(kb.fiber_names.clone(), chart);
    for v in &kb.fiber_names {
        let e = Expr::sym(v);
        if ann.is_coefficient(&Atom::sym(v))? && vfilt.offer(&e)? {
            fiber.push(Invariant { name: v.clone(), expr: e, provenance: Provenance::Coordinate });
        }
    }
    for (name, h) in &hints.fiber_invariants {
        if !ann.annihilates(h)? {
            return Err(KinematicError::BadHint { name: name.clone(), reason: "not annihilated by the residual generators".into() });
        }
        if fiber.len() < expected_fiber && vfilt.offer(h)? {
            fiber.push(Invariant { name: name.clone(), expr: h.clone(), provenance: Provenance::Hint });
        }
    }
    if fiber.len() < expected_fiber {
        let mut base_active = Vec::new();
        for s in &base_like {
            let a = Atom::sym(s);
            if !ann.is_coefficient(&a)? {
                base_active.push(a);
            }
        }
        let mut v_active = Vec::new();
        for v in &kb.fiber_names {
            if !ann.is_coefficient(&Atom::sym(v))? {
                v_active.push(Expr::sym(v));
            }
        }
        let monos = monomials(&base_active, 0, max_degree, &rules);
        let mut terms = Vec::new();
        for v in &v_active {
            for m in monos.iter().filter(|m| m.degree() < max_degree) {
                terms.push(Expr::from_poly(Poly::term(m.clone(), Q::from_integer(1.into()))).mul(v));
            }
        }
        for m in &monos {
            terms.push(Expr::from_poly(Poly::term(m.clone(), Q::from_integer(1.into()))));
        }
        let mut dens = vec![Expr::one()];
        dens.extend(hints.denominators.iter().cloned());
        'outer: for d in &dens {
            let eqs: Vec<Vec<Expr>> = kb
                .residual
                .iter()
                .map(|v| {
                    let vd = apply_raw(v, d, chart)?;
                    terms.iter().map(|t| Ok(apply_raw(v, t, chart)?.mul(d).sub(&t.mul(&vd)))).collect::<Result<Vec<_>, SymError>>()
                })
                .collect::<Result<_, _>>()?;
            let rows = undetermined_rows(&eqs, &ann, &f)?;
            for sol in solve_undetermined(&rows, terms.len(), &f)? {
                if fiber.len() >= expected_fiber {
                    break 'outer;
                }
                let e = f.norm(&combine(&sol, &terms, &f)?.div(d)?)?;
                if vfilt.offer(&e)? {
                    let i = fiber.len();
                    fiber.push(Invariant { name: format!("w{}", i + 1), expr: e.clone(), provenance: Provenance::Computed(e.degree()) });
                }
            }
        }
    }
    if fiber.len() < expected_fiber {
        return Err(KinematicError::InsufficientInvariants { kind: "fiber".into(), found: fiber.len(), expected: expected_fiber });
    }
    if hints.reduced_names.len() == fiber.len() {
        for (inv, n) in fiber.iter_mut().zip(&hints.reduced_names) {
            inv.name = n.clone();
        }
    }
    Ok(InvariantSet { base, fiber, expected_base, expected_fiber })
}

fn combine(sol: &[Expr], terms: &[Expr], f: &Field) -> Result<Expr, SymError> {
    let mut e = Expr::zero();
    for (k, t) in sol.iter().zip(terms) {
        if !k.is_zero() {
            e = e.add(&k.mul(t));
        }
    }
    f.norm(&e)
}

/// Everything the kinematic diagram shows.
#[derive(Debug, Clone)]
pub struct KinematicDiagram {
    pub transversality: TransversalityReport,
    pub constraints: IsotropyConstraintSet,
    pub bundle: KinematicBundle,
    pub invariants: InvariantSet,
}

pub fn kinematic_diagram(problem: &Problem) -> Result<KinematicDiagram, KinematicError> {
    let seed = problem.options.seed;
    let transversality = transversality_report(&problem.algebra, &problem.bundle, seed)?;
    let constraints = isotropy_constraints(&problem.algebra, &problem.bundle, &problem.discrete)?;
    let bundle = build_kinematic_bundle(&problem.algebra, &problem.bundle, &constraints, &problem.hints, seed)?;
    let invariants = compute_invariants(&bundle, transversality.rank_base, &problem.hints, problem.options.max_degree)?;
    Ok(KinematicDiagram { transversality, constraints, bundle, invariants })
}

/// True for atoms that are symbols of the given kind in a table.
pub fn is_kind(b: &BundleSpec, a: &Atom, kind: SymbolKind) -> bool {
    match a.data() {
        AtomData::Sym(s) => b.table.kind(s) == Some(kind),
        AtomData::App(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::{ex, SymbolTable};

    fn rotations() -> (BundleSpec, LieAlgebra) {
        let mut chart = Chart::default();
        chart.add_dependent("r", ex("x1^2 + x2^2 + x3^2")).unwrap();
        chart.identity_rules.push(RewriteRule::from_expr_pair(&ex("x3^2"), ex("r^2 - x1^2 - x2^2")).unwrap()).unwrap();
        let b = BundleSpec {
            base: vec!["t".into(), "x1".into(), "x2".into(), "x3".into()],
            fiber: vec!["u1".into(), "u2".into(), "u3".into(), "p".into()],
            chart,
            table: SymbolTable::permissive(),
        };
        let rot = |n: &str, a: &str, b_: &str, ua: &str, ub: &str| {
            VectorField::new(
                n,
                [
                    (a.to_string(), ex(&format!("-{b_}"))),
                    (b_.to_string(), ex(a)),
                    (ua.to_string(), ex(&format!("-{ub}"))),
                    (ub.to_string(), ex(ua)),
                ]
                .into_iter()
                .collect(),
            )
        };
        let gens = vec![
            rot("V1", "x2", "x3", "u2", "u3"),
            rot("V2", "x3", "x1", "u3", "u1"),
            rot("V3", "x1", "x2", "u1", "u2"),
        ];
        let alg = LieAlgebra::new(gens, &b).unwrap();
        (b, alg)
    }

    #[test]
    fn rotation_ranks_and_fiber() {
        let (b, alg) = rotations();
        let t = transversality_report(&alg, &b, 1).unwrap();
        assert_eq!((t.rank_base, t.rank_total, t.holds), (2, 3, false));
        let cs = isotropy_constraints(&alg, &b, &[]).unwrap();
        assert_eq!(cs.combos.len(), 1);
        let hints = Hints { fiber_names: vec!["A".into(), "B".into()], ..Hints::default() };
        let kb = build_kinematic_bundle(&alg, &b, &cs, &hints, 1).unwrap();
        assert_eq!(kb.fiber_dim, 2);
        let ratio = kb.bundle.chart.field().div(&kb.inclusion["u2"], &kb.inclusion["u1"]).unwrap();
        assert_eq!(ratio, ex("x2/x1"));
        let inv = compute_invariants(&kb, t.rank_base, &hints, 2).unwrap();
        let names: Vec<&str> = inv.base.iter().map(|i| i.name.as_str()).collect();
        assert_eq!(names, vec!["t", "r"]);
        assert_eq!(inv.fiber.len(), 2);
    }

    #[test]
    fn translation_has_empty_bundle() {
        let b = BundleSpec { base: vec!["t".into()], fiber: vec!["u".into(), "p".into()], chart: Chart::default(), table: SymbolTable::permissive() };
        let v = VectorField::new("T", [("u".to_string(), ex("1"))].into_iter().collect());
        let alg = LieAlgebra::new(vec![v], &b).unwrap();
        let cs = isotropy_constraints(&alg, &b, &[]).unwrap();
        assert!(matches!(
            build_kinematic_bundle(&alg, &b, &cs, &Hints::default(), 0),
            Err(KinematicError::EmptyKinematic { .. })
        ));
    }

    #[test]
    fn plane_rotation_invariant_search() {
        let b = BundleSpec { base: vec!["x".into(), "y".into()], fiber: vec!["u".into()], chart: Chart::default(), table: SymbolTable::permissive() };
        let v = VectorField::new("R", [("x".to_string(), ex("-y")), ("y".to_string(), ex("x"))].into_iter().collect());
        let alg = LieAlgebra::new(vec![v], &b).unwrap();
        let cs = isotropy_constraints(&alg, &b, &[]).unwrap();
        let kb = build_kinematic_bundle(&alg, &b, &cs, &Hints::default(), 0).unwrap();
        let inv = compute_invariants(&kb, 1, &Hints::default(), 2).unwrap();
        assert_eq!(inv.base[0].expr, ex("x^2 + y^2"));
        assert_eq!(inv.fiber[0].expr, ex("u"));
    }
}
