//! Dynamic reduction: the invariant-section ansatz, its jets, restriction of the
//! operator, the invariant frame and factorization through it.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::fields::{apply_raw, BundleSpec, Chart, FieldError, JetContext, VectorField};
use crate::kinematic::{
    monomials, restrict_field, solve_undetermined, undetermined_rows, Annihilator, InvariantSet, KinematicBundle,
    KinematicDiagram, KinematicError,
};
use crate::linalg::{solve_columns, Echelon, Field, SparseRow};
use crate::problem::{FrameKind, OperatorSpec, Problem};
use crate::symkernel::{substitute, Atom, AtomData, Expr, Poly, RewriteRule, RuleSet, SymError, SymbolKind, SymbolTable, Q};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DynamicError {
    #[error(transparent)]
    Kinematic(#[from] KinematicError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("the problem declares no operator")]
    NoOperator,
    #[error("fiber invariant `{0}` is not affine in the kinematic fiber coordinates")]
    NonAffineInvariant(String),
    #[error("the action of {generator} on the frame leaves the frame (component along `{target}`)")]
    FrameNotClosed { generator: String, target: String },
    #[error("restricted operator is not in the span of the invariant frame (component `{component}`)")]
    FactorizationFailure { component: String },
    #[error("reduced component {component} depends on parametric variables along {generator}")]
    IndependenceFailure { component: String, generator: String },
    #[error("reduced component {component} still mentions parametric symbols {symbols:?}; supply a cross section")]
    ParametricResidue { component: String, symbols: Vec<String> },
}

/// The generalized invariant-section ansatz and its jets.
#[derive(Debug, Clone)]
pub struct Ansatz {
    /// reduced unknown name -> its atom (an application of the base invariants, or a constant symbol)
    pub unknowns: Vec<(String, Expr)>,
    /// argument names of the reduced unknowns
    pub reduced_base: Vec<String>,
    /// kinematic fiber coordinate -> expression in base and reduced unknowns
    pub fiber_values: BTreeMap<String, Expr>,
    /// original fiber coordinate -> section expression
    pub section: BTreeMap<String, Expr>,
    /// jet symbol -> expression
    pub jets: BTreeMap<String, Expr>,
    pub jc: JetContext,
    /// chart over the base with rules on the reduced unknowns
    pub chart: Chart,
    pub roots: BTreeMap<String, Expr>,
    pub table: SymbolTable,
}

pub fn build_ansatz(
    kb: &KinematicBundle,
    inv: &InvariantSet,
    original: &BundleSpec,
) -> Result<Ansatz, DynamicError> {
    let args: Vec<Expr> = inv.base_exprs();
    let reduced_base: Vec<String> = inv.base.iter().map(|i| i.name.clone()).collect();
    let mut table = kb.bundle.table.clone();
    let mut unknowns = Vec::new();
    for i in &inv.fiber {
        if args.is_empty() {
            table.declare(&i.name, SymbolKind::ReducedFiber);
            unknowns.push((i.name.clone(), Expr::sym(&i.name)));
        } else {
            let names: Vec<&str> = reduced_base.iter().map(|s| s.as_str()).collect();
            table.declare_function(&i.name, &names);
            unknowns.push((i.name.clone(), Expr::atom(Atom::app(&i.name, Vec::new(), args.clone()))));
        }
    }
    let chart = &kb.bundle.chart;
    let f = chart.field();
    // invert the fiber invariants: I_b = sum_a M_ba v_a + c_b
    let zero: BTreeMap<String, Expr> = kb.fiber_names.iter().map(|v| (v.clone(), Expr::zero())).collect();
    let mut cols = vec![Vec::new(); kb.fiber_names.len()];
    let mut rhs = Vec::new();
    for (i, (_, w)) in inv.fiber.iter().zip(&unknowns) {
        for (a, v) in kb.fiber_names.iter().enumerate() {
            let d = chart.coord_partial(&i.expr, v)?;
            if kb.fiber_names.iter().any(|x| d.mentions(x)) {
                return Err(DynamicError::NonAffineInvariant(i.name.clone()));
            }
            cols[a].push(d);
        }
        rhs.push(w.sub(&f.norm(&substitute(&i.expr, &zero)?)?));
    }
    let vals = solve_columns(&cols, &rhs, &f)?.ok_or_else(|| DynamicError::NonAffineInvariant("fiber invariants".into()))?;
    let fiber_values: BTreeMap<String, Expr> = kb.fiber_names.iter().cloned().zip(vals).collect();
    let mut section = BTreeMap::new();
    for (u, iota) in &kb.inclusion {
        section.insert(u.clone(), chart.reduce_identity(&substitute(iota, &fiber_values)?)?);
    }
    // chart on the base: rules on v become rules on the unknowns, fiber dependents move along
    let mut achart = chart.clone();
    let mut kept = RuleSet::new();
    for r in chart.constraint_rules.rules() {
        if !kb.reduced_rules.rules().contains(r) {
            kept.push(r.clone())?;
        }
    }
    for r in kb.reduced_rules.rules() {
        let v = r.lhs.as_sym().expect("symbol rule");
        if let Some(a) = fiber_values[v].as_atom() {
            kept.push(RewriteRule::new(a.clone(), r.power, substitute(&r.rhs, &fiber_values)?)?)?;
        }
    }
    achart.constraint_rules = kept;
    let fdeps: Vec<String> = achart
        .dependents
        .iter()
        .filter(|(_, d)| kb.fiber_names.iter().any(|v| d.square.mentions(v)))
        .map(|(k, _)| k.clone())
        .collect();
    let mut roots = BTreeMap::new();
    for (k, v) in &kb.root_bindings {
        roots.insert(k.clone(), substitute(v, &fiber_values)?);
    }
    for d in fdeps {
        let sq = substitute(&achart.dependents[&d].square, &fiber_values)?;
        achart.dependents.remove(&d);
        achart.add_dependent(&d, sq)?;
    }
    let jc = JetContext::new(&original.base, &original.fiber, 0);
    Ok(Ansatz {
        unknowns,
        reduced_base,
        fiber_values,
        section,
        jets: BTreeMap::new(),
        jc,
        chart: achart,
        roots,
        table,
    })
}

/// Jets of the section to order k by repeated differentiation along base coordinates.
pub fn prolong_ansatz(a: &mut Ansatz, order: usize) -> Result<(), DynamicError> {
    let jc = JetContext::new(&a.jc.independents, &a.jc.dependents, order);
    let mut jets = BTreeMap::new();
    for u in &jc.dependents {
        let mut level: Vec<(Vec<usize>, Expr)> = vec![(Vec::new(), a.section[u].clone())];
        for _ in 0..order {
            let mut next: BTreeMap<Vec<usize>, Expr> = BTreeMap::new();
            for (idx, e) in &level {
                let start = idx.last().copied().unwrap_or(0);
                for i in start..jc.independents.len() {
                    let mut k = idx.clone();
                    k.push(i);
                    let d = a.chart.coord_partial(e, &jc.independents[i])?;
                    next.insert(k, d);
                }
            }
            for (k, e) in &next {
                jets.insert(jc.name(u, k).expect("within order"), e.clone());
            }
            level = next.into_iter().collect();
        }
    }
    a.jets = jets;
    a.jc = jc;
    Ok(())
}

/// Substitute the ansatz into an expression over jet coordinates and reduce.
pub fn restrict_expr(e: &Expr, a: &Ansatz) -> Result<Expr, SymError> {
    let mut b = a.section.clone();
    for (k, v) in &a.jets {
        b.insert(k.clone(), v.clone());
    }
    for (k, v) in &a.roots {
        b.insert(k.clone(), v.clone());
    }
    a.chart.reduce(&substitute(e, &b)?)
}

pub fn restrict_operator(op: &OperatorSpec, a: &Ansatz) -> Result<BTreeMap<String, Expr>, DynamicError> {
    let mut out = BTreeMap::new();
    for fsym in &op.frame {
        let c = op.components.get(fsym).cloned().unwrap_or_else(Expr::zero);
        out.insert(fsym.clone(), restrict_expr(&c, a)?);
    }
    Ok(out)
}

/// The matrix of L_V on the frame: row A holds L_V f^A in frame coordinates.
pub fn frame_action(op: &OperatorSpec, g: &VectorField, chart: &Chart) -> Result<Vec<Vec<Expr>>, DynamicError> {
    let n = op.frame.len();
    let mut m = vec![vec![Expr::zero(); n]; n];
    if let Some(act) = op.actions.get(&g.name) {
        for (a, fa) in op.frame.iter().enumerate() {
            if let Some(e) = act.get(fa) {
                for (b, fb) in op.frame.iter().enumerate() {
                    m[a][b] = chart.coord_partial(e, fb)?;
                }
            }
        }
        return Ok(m);
    }
    let position = |kind: &FrameKind| op.frame.iter().position(|s| op.kinds.get(s) == Some(kind));
    for (a, fa) in op.frame.iter().enumerate() {
        match op.kinds.get(fa).unwrap_or(&FrameKind::Scalar) {
            FrameKind::Scalar => {}
            FrameKind::Vector(c) => {
                // L_V ∂_c = -sum_d (∂V^d/∂c) ∂_d
                for (d, vd) in &g.coeffs {
                    let k = chart.coord_partial(vd, c)?;
                    if k.is_zero() {
                        continue;
                    }
                    match position(&FrameKind::Vector(d.clone())) {
                        Some(b) => m[a][b] = m[a][b].sub(&k),
                        None => return Err(DynamicError::FrameNotClosed { generator: g.name.clone(), target: d.clone() }),
                    }
                }
            }
            FrameKind::Covector(c) => {
                // L_V dc = sum_d (∂V^c/∂d) dd
                let vc = g.coeff(c);
                for d in vc.free_symbols() {
                    let k = chart.coord_partial(&vc, &d)?;
                    if k.is_zero() {
                        continue;
                    }
                    match position(&FrameKind::Covector(d.clone())) {
                        Some(b) => m[a][b] = m[a][b].add(&k),
                        None if chart.dependents.contains_key(&d) => {}
                        None => return Err(DynamicError::FrameNotClosed { generator: g.name.clone(), target: d.clone() }),
                    }
                }
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct InvariantFrame {
    pub frame: Vec<String>,
    /// each vector: coefficients c_A over (base, kinematic fiber)
    pub vectors: Vec<Vec<Expr>>,
}

impl InvariantFrame {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }
}

/// Invariant combinations sum_A c_A f^A with coefficients polynomial in the active
/// atoms up to `max_degree`, under the given fields and their frame actions.
pub fn invariant_frame(
    op: &OperatorSpec,
    originals: &[VectorField],
    kb: &KinematicBundle,
    original: &BundleSpec,
    max_degree: u32,
) -> Result<InvariantFrame, DynamicError> {
    let chart = &kb.bundle.chart;
    let f = chart.field();
    let mut residual = Vec::new();
    let mut actions = Vec::new();
    for g in originals {
        residual.push(restrict_field(g, original, kb)?);
        let m = frame_action(op, g, &original.chart)?;
        let m: Vec<Vec<Expr>> =
            m.iter().map(|row| row.iter().map(|x| kb.restrict(x)).collect()).collect::<Result<_, _>>()?;
        actions.push(m);
    }
    let ann = Annihilator::new(&residual, chart);
    let mut active = Vec::new();
    let base_like: Vec<String> = kb
        .bundle
        .base
        .iter()
        .cloned()
        .chain(chart.dependents.keys().filter(|d| kb.bundle.base_like(d)).cloned())
        .chain(kb.fiber_names.iter().cloned())
        .collect();
    for s in &base_like {
        let a = Atom::sym(s);
        if !ann.is_coefficient(&a)? {
            active.push(a);
        }
    }
    let rules = chart.all_rules()?;
    let monos = monomials(&active, 0, max_degree, &rules);
    let terms: Vec<Expr> = monos.iter().map(|m| Expr::from_poly(Poly::term(m.clone(), Q::from_integer(1.into())))).collect();
    let n = op.frame.len();
    let nm = terms.len();
    let idx = |a: usize, m: usize| a * nm + m;
    let mut eqs: Vec<Vec<Expr>> = Vec::new();
    for (v, mat) in residual.iter().zip(&actions) {
        let vt: Vec<Expr> = terms.iter().map(|t| apply_raw(v, t, chart)).collect::<Result<_, _>>()?;
        for b in 0..n {
            let mut eq = vec![Expr::zero(); n * nm];
            for (m, d) in vt.iter().enumerate() {
                eq[idx(b, m)] = d.clone();
            }
            for a in 0..n {
                if mat[a][b].is_zero() {
                    continue;
                }
                for (m, t) in terms.iter().enumerate() {
                    eq[idx(a, m)] = eq[idx(a, m)].add(&t.mul(&mat[a][b]));
                }
            }
            eqs.push(eq);
        }
    }
    for kappa in &op.constraints {
        let mut eq = vec![Expr::zero(); n * nm];
        for (a, fa) in op.frame.iter().enumerate() {
            let k = kb.restrict(&original.chart.coord_partial(kappa, fa)?)?;
            if k.is_zero() {
                continue;
            }
            for (m, t) in terms.iter().enumerate() {
                eq[idx(a, m)] = t.mul(&k);
            }
        }
        eqs.push(eq);
    }
    let rows = undetermined_rows(&eqs, &ann, &f)?;
    let mut cands: Vec<Vec<Expr>> = Vec::new();
    for sol in solve_undetermined(&rows, n * nm, &f)? {
        let mut c = vec![Expr::zero(); n];
        for a in 0..n {
            for m in 0..nm {
                let k = &sol[idx(a, m)];
                if !k.is_zero() {
                    c[a] = c[a].add(&k.mul(&terms[m]));
                }
            }
        }
        let c: Vec<Expr> = c.iter().map(|x| f.norm(x)).collect::<Result<_, _>>()?;
        if c.iter().any(|x| !x.is_zero()) {
            cands.push(c);
        }
    }
    cands.sort_by_key(|c| c.iter().map(|x| x.degree()).max().unwrap_or(0));
    let mut ech = Echelon::new();
    let mut vectors = Vec::new();
    for c in cands {
        let row: SparseRow = c.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(j, x)| (j, x.clone())).collect();
        if ech.insert(&row, &f)?.is_some() {
            vectors.push(normalize_vector(&c)?);
        }
    }
    Ok(InvariantFrame { frame: op.frame.clone(), vectors })
}

/// Scale so the first nonzero entry has leading coefficient 1.
fn normalize_vector(c: &[Expr]) -> Result<Vec<Expr>, SymError> {
    let lead = c.iter().find(|x| !x.is_zero()).expect("nonzero vector");
    let lc = lead.num().lc() / lead.den().lc();
    let inv = Q::from_integer(1.into()) / lc;
    Ok(c.iter().map(|x| x.scale(&inv)).collect())
}

#[derive(Debug, Clone)]
pub struct ReducedOperator {
    pub components: Vec<Expr>,
    /// frame vectors over the ansatz: row Q is M^Q_A
    pub frame: Vec<Vec<Expr>>,
    pub frame_symbols: Vec<String>,
    pub restricted: BTreeMap<String, Expr>,
    pub factorization_verified: bool,
    pub independence_verified: bool,
    pub cross_section: BTreeMap<String, Expr>,
}

/// Solve Δ_Inv,A = sum_Q Δ̃_Q M^Q_A and certify independence from parametric variables.
pub fn factor_through_frame(
    restricted: &BTreeMap<String, Expr>,
    frame: &InvariantFrame,
    a: &Ansatz,
    generators: &[VectorField],
    cross_section: &BTreeMap<String, Expr>,
) -> Result<ReducedOperator, DynamicError> {
    let f = a.chart.field();
    let m: Vec<Vec<Expr>> = frame
        .vectors
        .iter()
        .map(|v| v.iter().map(|x| f.norm(&substitute(x, &a.fiber_values)?)).collect::<Result<Vec<_>, SymError>>())
        .collect::<Result<_, _>>()?;
    let b: Vec<Expr> = frame.frame.iter().map(|s| restricted[s].clone()).collect();
    let comps = match solve_columns(&m, &b, &f)? {
        Some(c) => c,
        None => {
            let i = residual_component(&m, &b, &f)?.unwrap_or(0);
            return Err(DynamicError::FactorizationFailure { component: frame.frame[i].clone() });
        }
    };
    // factorization identity
    for (ai, s) in frame.frame.iter().enumerate() {
        let mut acc = Expr::zero();
        for (q, c) in comps.iter().enumerate() {
            acc = acc.add(&c.mul(&m[q][ai]));
        }
        if !f.is_zero(&acc.sub(&restricted[s]))? {
            return Err(DynamicError::FactorizationFailure { component: s.clone() });
        }
    }
    // independence from parametric variables: the base parts of the generators annihilate each component
    for (q, c) in comps.iter().enumerate() {
        for g in generators {
            let mut acc = Expr::zero();
            for x in &a.jc.independents {
                let xi = g.coeff(x);
                if !xi.is_zero() {
                    acc = acc.add(&xi.mul(&a.chart.coord_partial(c, x)?));
                }
            }
            if !f.is_zero(&acc)? {
                return Err(DynamicError::IndependenceFailure { component: format!("Q{}", q + 1), generator: g.name.clone() });
            }
        }
    }
    let mut used = BTreeMap::new();
    let mut out = Vec::new();
    for (q, c) in comps.iter().enumerate() {
        let mut c = c.clone();
        let params = parametric_symbols(&c, a);
        if !params.is_empty() {
            let cs: BTreeMap<String, Expr> =
                cross_section.iter().filter(|(k, _)| c.free_symbols().contains(k) || a.chart.dependents.contains_key(*k)).map(|(k, v)| (k.clone(), v.clone())).collect();
            c = f.norm(&substitute(&c, &cs)?)?;
            used.extend(cs);
            let rest = parametric_symbols(&c, a);
            if !rest.is_empty() {
                return Err(DynamicError::ParametricResidue { component: format!("Q{}", q + 1), symbols: rest });
            }
        }
        out.push(c);
    }
    Ok(ReducedOperator {
        components: out,
        frame: m,
        frame_symbols: frame.frame.clone(),
        restricted: restricted.clone(),
        factorization_verified: true,
        independence_verified: true,
        cross_section: used,
    })
}

/// The equation index where the augmented column first becomes a pivot.
fn residual_component(m: &[Vec<Expr>], b: &[Expr], f: &Field) -> Result<Option<usize>, SymError> {
    let n = m.len();
    let mut e = Echelon::new();
    for (i, bi) in b.iter().enumerate() {
        let mut row = SparseRow::new();
        for (j, c) in m.iter().enumerate() {
            if !c[i].is_zero() {
                row.insert(j, c[i].clone());
            }
        }
        if !bi.is_zero() {
            row.insert(n, bi.clone());
        }
        if e.insert(&row, f)? == Some(n) {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Base symbols (and base dependents) in `e` that are not reduced coordinates.
pub fn parametric_symbols(e: &Expr, a: &Ansatz) -> Vec<String> {
    let mut syms: Vec<String> = e.atoms().iter().filter_map(|x| x.as_sym().map(|s| s.to_string())).collect();
    for x in e.atoms() {
        if let AtomData::App(app) = x.data() {
            if !a.unknowns.iter().any(|(n, _)| *n == app.func) {
                for arg in &app.args {
                    syms.extend(arg.free_symbols());
                }
            }
        }
    }
    syms.sort();
    syms.dedup();
    syms.into_iter()
        .filter(|s| {
            !a.reduced_base.contains(s)
                && (a.jc.independents.contains(s) || a.chart.dependents.contains_key(s))
        })
        .collect()
}

/// Everything the dynamic diagram shows.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub kinematic: KinematicDiagram,
    pub ansatz: Ansatz,
    pub frame: InvariantFrame,
    pub reduced: ReducedOperator,
}

pub fn reduce(problem: &Problem, kin: KinematicDiagram) -> Result<Reduction, DynamicError> {
    let op = problem.operator.as_ref().ok_or(DynamicError::NoOperator)?;
    let mut ansatz = build_ansatz(&kin.bundle, &kin.invariants, &problem.bundle)?;
    prolong_ansatz(&mut ansatz, op.order)?;
    let restricted = restrict_operator(op, &ansatz)?;
    let frame = invariant_frame(op, &problem.algebra.generators, &kin.bundle, &problem.bundle, problem.options.max_degree)?;
    let reduced = factor_through_frame(&restricted, &frame, &ansatz, &problem.algebra.generators, &problem.hints.cross_section)?;
    Ok(Reduction { kinematic: kin, ansatz, frame, reduced })
}

/// Replace applications of the reduced unknowns by closed forms in the reduced
/// base symbols, differentiating for derivative atoms.
pub fn substitute_functions(
    e: &Expr,
    forms: &BTreeMap<String, Expr>,
    arg_names: &[String],
    chart: &Chart,
) -> Result<Expr, SymError> {
    let mut err = None;
    let out = e.map_atoms(&mut |atom: &Atom| {
        let app = atom.as_app()?;
        let form = forms.get(&app.func)?;
        let mut v = form.clone();
        for k in &app.deriv {
            match chart.coord_partial(&v, &arg_names[*k as usize]) {
                Ok(d) => v = d,
                Err(x) => {
                    err = Some(x);
                    return None;
                }
            }
        }
        let b: BTreeMap<String, Expr> = arg_names
            .iter()
            .zip(&app.args)
            .filter(|(n, x)| x.as_sym() != Some(n.as_str()))
            .map(|(n, x)| (n.clone(), x.clone()))
            .collect();
        if b.is_empty() {
            return Some(v);
        }
        match substitute(&v, &b) {
            Ok(x) => Some(x),
            Err(x) => {
                err = Some(x);
                None
            }
        }
    })?;
    match err {
        Some(x) => Err(x),
        None => {
            // constant unknowns are plain symbols
            let consts: BTreeMap<String, Expr> =
                forms.iter().filter(|(k, _)| e.free_symbols().contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
            if consts.is_empty() {
                Ok(out)
            } else {
                substitute(&out, &consts)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolutionCertificate {
    pub reduced: Vec<Expr>,
    /// original operator components on the lifted section
    pub original: Vec<(String, Expr)>,
    /// per-component numeric maxima when a symbolic residual did not vanish
    pub numeric_reduced: Option<Vec<f64>>,
    pub numeric_original: Option<Vec<f64>>,
    pub passed: bool,
}

pub fn lifted_section(a: &Ansatz, forms: &BTreeMap<String, Expr>) -> Result<BTreeMap<String, Expr>, SymError> {
    let mut s = BTreeMap::new();
    for (u, e) in &a.section {
        s.insert(u.clone(), a.chart.reduce_identity(&substitute_functions(e, forms, &a.reduced_base, &a.chart)?)?);
    }
    Ok(s)
}

/// Substitute a closed-form reduced solution into the reduced system and, through the
/// ansatz, into the original operator.
pub fn verify_solution(
    forms: &BTreeMap<String, Expr>,
    red: &Reduction,
    op: &OperatorSpec,
    numeric: Option<&dyn Fn(&[Expr], &BTreeMap<String, Expr>) -> Result<(Vec<f64>, Vec<f64>), String>>,
) -> Result<SolutionCertificate, DynamicError> {
    let a = &red.ansatz;
    let f = a.chart.field();
    let mut reduced = Vec::new();
    for c in &red.reduced.components {
        reduced.push(f.norm(&substitute_functions(c, forms, &a.reduced_base, &a.chart)?)?);
    }
    let section = lifted_section(a, forms)?;
    let mut lifted = a.clone();
    lifted.section = section.clone();
    prolong_ansatz(&mut lifted, op.order)?;
    let mut original = Vec::new();
    for s in &op.frame {
        let c = op.components.get(s).cloned().unwrap_or_else(Expr::zero);
        let mut r = restrict_expr(&c, &lifted)?;
        r = f.norm(&substitute_functions(&r, forms, &a.reduced_base, &a.chart)?)?;
        original.push((s.clone(), r));
    }
    let symbolic_ok = reduced.iter().all(|x| x.is_zero()) && original.iter().all(|(_, x)| x.is_zero());
    let (mut numeric_reduced, mut numeric_original) = (None, None);
    let mut passed = symbolic_ok;
    if !symbolic_ok {
        if let Some(run) = numeric {
            match run(&reduced, &section) {
                Ok((nr, no)) => {
                    passed = nr.iter().chain(no.iter()).all(|x| *x < 1e-6);
                    numeric_reduced = Some(nr);
                    numeric_original = Some(no);
                }
                Err(_) => passed = false,
            }
        }
    }
    Ok(SolutionCertificate { reduced, original, numeric_reduced, numeric_original, passed })
}
