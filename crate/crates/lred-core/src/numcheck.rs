//! Independent numerical oracle: seeded chart sampling, flow integration,
//! finite differences and residual scans.
//!
//! Nothing here decides an outcome by a symbolic zero test. Closed-form fixture
//! functions are evaluated from their raw parse trees, and jets of candidate
//! sections come from finite differences.

use std::collections::BTreeMap;
use std::sync::Mutex;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fields::{Chart, JetContext, VectorField};
use crate::symkernel::{eval_numeric, Expr, NumericFns, SymError, Tree, Q};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("no admissible chart point found in {0} draws")]
    ChartDegenerate(usize),
    #[error("flow integration failed: {0}")]
    IntegrationFailure(String),
}

/// Where and how many points to draw.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    pub seed: u64,
    pub count: usize,
    pub boxes: BTreeMap<String, (f64, f64)>,
    pub default_box: (f64, f64),
    /// Minimum |value| of every watched denominator.
    pub exclusion: f64,
}

impl SamplePlan {
    pub fn new(seed: u64, count: usize) -> SamplePlan {
        SamplePlan { seed, count, boxes: BTreeMap::new(), default_box: (0.3, 1.2), exclusion: 1e-3 }
    }

    pub fn with_boxes(mut self, boxes: &BTreeMap<String, (f64, f64)>) -> SamplePlan {
        for (k, v) in boxes {
            self.boxes.insert(k.clone(), *v);
        }
        self
    }

    fn box_of(&self, s: &str) -> (f64, f64) {
        self.boxes.get(s).copied().unwrap_or(self.default_box)
    }
}

/// Draws chart points: free symbols uniformly in their boxes, dependent roots and
/// constraint-ruled symbols from their defining expressions (positive root).
pub struct ChartSampler<'a> {
    chart: &'a Chart,
    free: Vec<String>,
    fixed: BTreeMap<String, f64>,
    denominators: Vec<Expr>,
    rng: ChaCha8Rng,
    plan: SamplePlan,
    fns: &'a dyn NumericFns,
}

pub const MAX_DRAWS: usize = 1000;

impl<'a> ChartSampler<'a> {
    pub fn new(
        chart: &'a Chart,
        free: &[String],
        fixed: &BTreeMap<String, f64>,
        denominators: Vec<Expr>,
        plan: &SamplePlan,
        fns: &'a dyn NumericFns,
    ) -> ChartSampler<'a> {
        let free = free
            .iter()
            .filter(|s| !fixed.contains_key(*s) && !chart.dependents.contains_key(*s) && ruled_value(chart, s).is_none())
            .cloned()
            .collect();
        ChartSampler {
            chart,
            free,
            fixed: fixed.clone(),
            denominators,
            rng: ChaCha8Rng::seed_from_u64(plan.seed),
            plan: plan.clone(),
            fns,
        }
    }

    /// Next admissible point, or ChartDegenerate after MAX_DRAWS rejections.
    pub fn next_point(&mut self) -> Result<BTreeMap<String, f64>, NumError> {
        for _ in 0..MAX_DRAWS {
            let mut p = self.fixed.clone();
            for s in &self.free {
                let (lo, hi) = self.plan.box_of(s);
                p.insert(s.clone(), self.rng.gen_range(lo..=hi));
            }
            if complete_point(self.chart, &mut p, self.fns).is_err() {
                continue;
            }
            let ok = self.denominators.iter().all(|d| match eval_numeric(d, &p, self.fns) {
                Ok(v) => v.is_finite() && v.abs() > self.plan.exclusion,
                Err(_) => false,
            });
            if ok {
                return Ok(p);
            }
        }
        Err(NumError::ChartDegenerate(MAX_DRAWS))
    }

    pub fn points(&mut self, n: usize) -> Result<Vec<BTreeMap<String, f64>>, NumError> {
        (0..n).map(|_| self.next_point()).collect()
    }

    /// An exact point: small rationals for the free symbols. Dependent and
    /// constraint-ruled symbols stay symbolic; their rules are rewritten at the point.
    pub fn rational_point(&mut self) -> BTreeMap<String, Q> {
        let mut p = BTreeMap::new();
        for s in &self.free {
            let (lo, hi) = self.plan.box_of(s);
            let den: i64 = self.rng.gen_range(1..=7);
            let lo_n = (lo * den as f64).ceil() as i64;
            let hi_n = (hi * den as f64).floor() as i64;
            let num = if hi_n >= lo_n { self.rng.gen_range(lo_n..=hi_n) } else { lo_n };
            p.insert(s.clone(), Q::new(num.into(), den.into()));
        }
        for (s, v) in &self.fixed {
            if let Some(q) = Q::from_float(*v) {
                p.insert(s.clone(), q);
            }
        }
        p
    }
}

fn ruled_value<'c>(chart: &'c Chart, s: &str) -> Option<(u32, &'c Expr)> {
    chart.constraint_rules.rules().iter().find(|r| r.lhs.is_sym(s)).map(|r| (r.power, &r.rhs))
}

/// Fill in dependent roots and constraint-ruled symbols; Err if a root is not real.
pub fn complete_point(chart: &Chart, p: &mut BTreeMap<String, f64>, fns: &dyn NumericFns) -> Result<(), NumError> {
    let mut pending: Vec<String> = chart.dependents.keys().filter(|k| !p.contains_key(*k)).cloned().collect();
    for r in chart.constraint_rules.rules() {
        if let Some(s) = r.lhs.as_sym() {
            if !p.contains_key(s) {
                pending.push(s.to_string());
            }
        }
    }
    let mut progress = true;
    while !pending.is_empty() && progress {
        progress = false;
        let mut rest = Vec::new();
        for s in pending {
            let (power, value) = match chart.dependents.get(&s) {
                Some(d) => (2, &d.square),
                None => ruled_value(chart, &s).expect("ruled"),
            };
            match eval_numeric(value, p, fns) {
                Ok(v) => {
                    let root = match power {
                        1 => v,
                        2 if v > 0.0 => v.sqrt(),
                        _ => return Err(NumError::ChartDegenerate(1)),
                    };
                    p.insert(s, root);
                    progress = true;
                }
                Err(SymError::UnboundSymbol(_)) => rest.push(s),
                Err(e) => return Err(e.into()),
            }
        }
        pending = rest;
    }
    if pending.is_empty() {
        Ok(())
    } else {
        Err(NumError::Sym(SymError::UnboundSymbol(pending[0].clone())))
    }
}

/// Recompute dependent roots after coordinates moved (constraint-ruled symbols are kept).
fn refresh_dependents(chart: &Chart, p: &mut BTreeMap<String, f64>, fns: &dyn NumericFns) -> Result<(), NumError> {
    for _ in 0..chart.dependents.len().max(1) {
        for (name, d) in &chart.dependents {
            let v = eval_numeric(&d.square, p, fns)?;
            if v <= 0.0 {
                return Err(NumError::Sym(SymError::NumericDomain(format!("{name} has a non-positive square"))));
            }
            p.insert(name.clone(), v.sqrt());
        }
    }
    Ok(())
}

/// A closed-form numeric function given by a raw expression tree.
#[derive(Debug, Clone)]
pub struct TreeFunction {
    pub args: Vec<String>,
    pub body: Tree,
}

/// Numeric values for opaque functions: closed-form trees where supplied,
/// seeded sinusoids otherwise.
#[derive(Debug)]
pub struct NumericEnv {
    pub defs: BTreeMap<String, TreeFunction>,
    pub params: BTreeMap<String, f64>,
    seed: u64,
    derived: Mutex<BTreeMap<(String, Vec<u32>), Tree>>,
}

impl Clone for NumericEnv {
    fn clone(&self) -> NumericEnv {
        NumericEnv::new(self.defs.clone(), self.params.clone(), self.seed)
    }
}

impl NumericEnv {
    pub fn new(defs: BTreeMap<String, TreeFunction>, params: BTreeMap<String, f64>, seed: u64) -> NumericEnv {
        NumericEnv { defs, params, seed, derived: Mutex::new(BTreeMap::new()) }
    }

    pub fn empty(seed: u64) -> NumericEnv {
        NumericEnv::new(BTreeMap::new(), BTreeMap::new(), seed)
    }

    /// Override (or add) a closed-form function.
    pub fn define(&mut self, name: &str, args: &[&str], body: Tree) {
        self.defs.insert(name.to_string(), TreeFunction { args: args.iter().map(|s| s.to_string()).collect(), body });
        self.derived.lock().expect("env lock").clear();
    }

    fn tree_call(&self, def: &TreeFunction, name: &str, deriv: &[u32], args: &[f64]) -> Result<f64, SymError> {
        let mut key = deriv.to_vec();
        key.sort_unstable();
        let body = {
            let mut cache = self.derived.lock().expect("env lock");
            match cache.get(&(name.to_string(), key.clone())) {
                Some(t) => t.clone(),
                None => {
                    let mut t = def.body.clone();
                    for k in &key {
                        let v = def.args.get(*k as usize).ok_or(SymError::Arity {
                            name: name.to_string(),
                            expected: def.args.len(),
                            got: *k as usize + 1,
                        })?;
                        t = tree_diff(&t, v);
                    }
                    cache.insert((name.to_string(), key), t.clone());
                    t
                }
            }
        };
        let mut point = self.params.clone();
        for (a, v) in def.args.iter().zip(args) {
            point.insert(a.clone(), *v);
        }
        tree_eval(&body, &point, self)
    }

    fn sinusoid(&self, name: &str, deriv: &[u32], args: &[f64]) -> f64 {
        // f(x) = c0 + sum_k a_k sin(w_k . x + phi_k), coefficients fixed by (seed, name)
        let mut h: u64 = 0xcbf29ce484222325;
        for b in name.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ h);
        let c0: f64 = rng.gen_range(1.0..2.0);
        let mut total = if deriv.is_empty() { c0 } else { 0.0 };
        for _ in 0..3 {
            let a: f64 = rng.gen_range(0.1..0.4);
            let w: Vec<f64> = (0..args.len()).map(|_| rng.gen_range(0.3..1.2)).collect();
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let arg: f64 = w.iter().zip(args).map(|(w, x)| w * x).sum::<f64>() + phi;
            let factor: f64 = deriv.iter().map(|k| w.get(*k as usize).copied().unwrap_or(0.0)).product();
            let shift = deriv.len() as f64 * std::f64::consts::FRAC_PI_2;
            total += a * factor * (arg + shift).sin();
        }
        total
    }
}

impl NumericFns for NumericEnv {
    fn call(&self, func: &str, deriv: &[u32], args: &[f64]) -> Result<f64, SymError> {
        match self.defs.get(func) {
            Some(def) => {
                if def.args.len() != args.len() {
                    return Err(SymError::Arity { name: func.to_string(), expected: def.args.len(), got: args.len() });
                }
                self.tree_call(def, func, deriv, args)
            }
            None => Ok(self.sinusoid(func, deriv, args)),
        }
    }
}

fn q_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Evaluate a raw tree; identifiers come from `point`, calls go to `fns`.
pub fn tree_eval(t: &Tree, point: &BTreeMap<String, f64>, fns: &dyn NumericFns) -> Result<f64, SymError> {
    Ok(match t {
        Tree::Num(q) => q_f64(q),
        Tree::Ident(s) => *point.get(s).ok_or_else(|| SymError::UnboundSymbol(s.clone()))?,
        Tree::Neg(a) => -tree_eval(a, point, fns)?,
        Tree::Add(xs) => {
            let mut acc = 0.0;
            for x in xs {
                acc += tree_eval(x, point, fns)?;
            }
            acc
        }
        Tree::Sub(a, b) => tree_eval(a, point, fns)? - tree_eval(b, point, fns)?,
        Tree::Mul(xs) => {
            let mut acc = 1.0;
            for x in xs {
                acc *= tree_eval(x, point, fns)?;
            }
            acc
        }
        Tree::Div(a, b) => {
            let d = tree_eval(b, point, fns)?;
            if d == 0.0 {
                return Err(SymError::NumericDomain("division by zero".into()));
            }
            tree_eval(a, point, fns)? / d
        }
        Tree::Pow(a, n) => tree_eval(a, point, fns)?.powi(*n as i32),
        Tree::Call { func, args } => {
            let v: Vec<f64> = args.iter().map(|a| tree_eval(a, point, fns)).collect::<Result<_, _>>()?;
            fns.call(func, &[], &v)?
        }
        Tree::Deriv { func, slots, args } => {
            let args = args.as_ref().ok_or_else(|| SymError::UnboundFunction(func.clone()))?;
            let v: Vec<f64> = args.iter().map(|a| tree_eval(a, point, fns)).collect::<Result<_, _>>()?;
            let d: Vec<u32> = slots
                .iter()
                .map(|s| s.parse::<u32>().map_err(|_| SymError::UnboundFunction(format!("{func} slot {s}"))))
                .collect::<Result<_, _>>()?;
            fns.call(func, &d, &v)?
        }
    })
}

/// Formal derivative of a raw tree, no simplification.
pub fn tree_diff(t: &Tree, v: &str) -> Tree {
    let zero = || Tree::Num(Q::from_integer(0.into()));
    match t {
        Tree::Num(_) => zero(),
        Tree::Ident(s) => Tree::Num(Q::from_integer(if s == v { 1 } else { 0 }.into())),
        Tree::Neg(a) => Tree::Neg(Box::new(tree_diff(a, v))),
        Tree::Add(xs) => Tree::Add(xs.iter().map(|x| tree_diff(x, v)).collect()),
        Tree::Sub(a, b) => Tree::Sub(Box::new(tree_diff(a, v)), Box::new(tree_diff(b, v))),
        Tree::Mul(xs) => Tree::Add(
            (0..xs.len())
                .map(|i| {
                    let mut f = xs.clone();
                    f[i] = tree_diff(&xs[i], v);
                    Tree::Mul(f)
                })
                .collect(),
        ),
        Tree::Div(a, b) => Tree::Div(
            Box::new(Tree::Sub(
                Box::new(Tree::Mul(vec![tree_diff(a, v), (**b).clone()])),
                Box::new(Tree::Mul(vec![(**a).clone(), tree_diff(b, v)])),
            )),
            Box::new(Tree::Pow(b.clone(), 2)),
        ),
        Tree::Pow(a, n) => {
            if *n == 0 {
                return zero();
            }
            Tree::Mul(vec![Tree::Num(Q::from_integer((*n).into())), Tree::Pow(a.clone(), n - 1), tree_diff(a, v)])
        }
        Tree::Call { func, args } => chain(func, &[], args, v),
        Tree::Deriv { func, slots, args: Some(args) } => chain(func, slots, args, v),
        Tree::Deriv { .. } => zero(),
    }
}

fn chain(func: &str, slots: &[String], args: &[Tree], v: &str) -> Tree {
    Tree::Add(
        args.iter()
            .enumerate()
            .map(|(k, a)| {
                let mut s = slots.to_vec();
                s.push(k.to_string());
                Tree::Mul(vec![Tree::Deriv { func: func.to_string(), slots: s, args: Some(args.to_vec()) }, tree_diff(a, v)])
            })
            .collect(),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// Integrate dp/ds = V(p) from each sample to `t_final` (Dormand-Prince 5(4),
/// rtol 1e-9, atol 1e-12) and return the largest relative change of `inv`.
pub fn flow_invariance(
    inv: &Expr,
    v: &VectorField,
    chart: &Chart,
    starts: &[BTreeMap<String, f64>],
    t_final: f64,
    fns: &dyn NumericFns,
) -> Result<f64, NumError> {
    let mut worst: f64 = 0.0;
    for p0 in starts {
        let i0 = eval_numeric(inv, p0, fns)?;
        let p1 = integrate_flow(v, chart, p0, t_final, fns)?;
        let i1 = eval_numeric(inv, &p1, fns)?;
        worst = worst.max((i1 - i0).abs() / (1.0 + i0.abs()));
    }
    Ok(worst)
}

pub fn integrate_flow(
    v: &VectorField,
    chart: &Chart,
    p0: &BTreeMap<String, f64>,
    t_final: f64,
    fns: &dyn NumericFns,
) -> Result<BTreeMap<String, f64>, NumError> {
    const RTOL: f64 = 1e-9;
    const ATOL: f64 = 1e-12;
    let coords: Vec<String> = v.coeffs.keys().cloned().collect();
    let rhs = |y: &[f64], base: &BTreeMap<String, f64>| -> Result<Vec<f64>, NumError> {
        let mut p = base.clone();
        for (c, x) in coords.iter().zip(y) {
            p.insert(c.clone(), *x);
        }
        refresh_dependents(chart, &mut p, fns)?;
        coords.iter().map(|c| Ok(eval_numeric(&v.coeffs[c], &p, fns)?)).collect()
    };
    let mut y: Vec<f64> = coords.iter().map(|c| p0.get(c).copied().unwrap_or(0.0)).collect();
    // Dormand-Prince tableau
    let a: [&[f64]; 7] = [
        &[],
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    let b5 = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    let b4 = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];
    let mut s = 0.0;
    let mut h = t_final / 16.0;
    let mut steps = 0;
    while s < t_final {
        steps += 1;
        if steps > 100_000 || h.abs() < 1e-14 {
            return Err(NumError::IntegrationFailure("step size underflow".into()));
        }
        if s + h > t_final {
            h = t_final - s;
        }
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        for i in 0..7 {
            let yi: Vec<f64> =
                (0..y.len()).map(|j| y[j] + h * a[i].iter().enumerate().map(|(m, aim)| aim * k[m][j]).sum::<f64>()).collect();
            k.push(rhs(&yi, p0)?);
        }
        let y5: Vec<f64> = (0..y.len()).map(|j| y[j] + h * (0..7).map(|i| b5[i] * k[i][j]).sum::<f64>()).collect();
        let y4: Vec<f64> = (0..y.len()).map(|j| y[j] + h * (0..7).map(|i| b4[i] * k[i][j]).sum::<f64>()).collect();
        let mut err: f64 = 0.0;
        for j in 0..y.len() {
            let sc = ATOL + RTOL * y[j].abs().max(y5[j].abs());
            err = err.max(((y5[j] - y4[j]) / sc).abs());
        }
        if err <= 1.0 {
            s += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    let mut p = p0.clone();
    for (cn, x) in coords.iter().zip(&y) {
        p.insert(cn.clone(), *x);
    }
    refresh_dependents(chart, &mut p, fns)?;
    Ok(p)
}

/// 4th-order central difference of `f` along coordinate `s` at `p`.
pub fn central_first<F>(f: &F, p: &BTreeMap<String, f64>, s: &str, h: f64) -> Result<f64, NumError>
where
    F: Fn(&BTreeMap<String, f64>) -> Result<f64, NumError>,
{
    let at = |k: f64| {
        let mut q = p.clone();
        *q.get_mut(s).expect("coordinate present") += k * h;
        f(&q)
    };
    Ok((-at(2.0)? + 8.0 * at(1.0)? - 8.0 * at(-1.0)? + at(-2.0)?) / (12.0 * h))
}

pub fn central_second<F>(f: &F, p: &BTreeMap<String, f64>, s: &str, h: f64) -> Result<f64, NumError>
where
    F: Fn(&BTreeMap<String, f64>) -> Result<f64, NumError>,
{
    let at = |k: f64| {
        let mut q = p.clone();
        *q.get_mut(s).expect("coordinate present") += k * h;
        f(&q)
    };
    Ok((-at(2.0)? + 16.0 * at(1.0)? - 30.0 * at(0.0)? + 16.0 * at(-1.0)? - at(-2.0)?) / (12.0 * h * h))
}

/// Numeric value of an expression with dependent roots recomputed from the coordinates.
pub fn eval_on_chart(e: &Expr, chart: &Chart, p: &BTreeMap<String, f64>, fns: &dyn NumericFns) -> Result<f64, NumError> {
    let mut q = p.clone();
    refresh_dependents(chart, &mut q, fns)?;
    Ok(eval_numeric(e, &q, fns)?)
}

/// Compare the symbolic chart derivative of `e` along `s` with central differences.
pub fn fd_crosscheck(
    e: &Expr,
    s: &str,
    chart: &Chart,
    points: &[BTreeMap<String, f64>],
    fns: &dyn NumericFns,
) -> Result<f64, NumError> {
    let d = chart.coord_partial(e, s)?;
    let f = |q: &BTreeMap<String, f64>| eval_on_chart(e, chart, q, fns);
    let mut worst: f64 = 0.0;
    for p in points {
        let h = 1e-4 * p[s].abs().max(1.0);
        let num = central_first(&f, p, s, h)?;
        let sym = eval_on_chart(&d, chart, p, fns)?;
        worst = worst.max(rel(num, sym));
    }
    Ok(worst)
}

/// Largest |value| of each component over the points.
pub fn residual_scan(
    components: &[Expr],
    points: &[BTreeMap<String, f64>],
    fns: &dyn NumericFns,
) -> Result<Vec<f64>, NumError> {
    let mut out = vec![0.0f64; components.len()];
    for p in points {
        for (i, c) in components.iter().enumerate() {
            out[i] = out[i].max(eval_numeric(c, p, fns)?.abs());
        }
    }
    Ok(out)
}

/// Evaluate an operator on a candidate section whose jets are obtained by finite
/// differences of the section's numeric values; returns per-component maxima.
pub fn section_residual(
    components: &[Expr],
    section: &BTreeMap<String, Expr>,
    jc: &JetContext,
    chart: &Chart,
    points: &[BTreeMap<String, f64>],
    fns: &dyn NumericFns,
) -> Result<Vec<f64>, NumError> {
    let mut out = vec![0.0f64; components.len()];
    for p in points {
        let mut full = p.clone();
        for u in &jc.dependents {
            let s = section.get(u).cloned().unwrap_or_else(Expr::zero);
            let f = |q: &BTreeMap<String, f64>| eval_on_chart(&s, chart, q, fns);
            full.insert(u.clone(), f(p)?);
            for (i, x) in jc.independents.iter().enumerate() {
                let h1 = 5e-4 * p[x].abs().max(1.0);
                if jc.order >= 1 {
                    full.insert(jc.name(u, &[i]).expect("order 1"), central_first(&f, p, x, h1)?);
                }
                if jc.order >= 2 {
                    let h2 = 2e-3 * p[x].abs().max(1.0);
                    full.insert(jc.name(u, &[i, i]).expect("order 2"), central_second(&f, p, x, h2)?);
                    for (j, y) in jc.independents.iter().enumerate().skip(i + 1) {
                        let hy = 5e-4 * p[y].abs().max(1.0);
                        let g = |q: &BTreeMap<String, f64>| central_first(&f, q, y, hy);
                        full.insert(jc.name(u, &[i, j]).expect("order 2"), central_first(&g, p, x, h1)?);
                    }
                }
            }
        }
        for (i, c) in components.iter().enumerate() {
            out[i] = out[i].max(eval_numeric(c, &full, fns)?.abs());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::{ex, parse_tree};

    #[test]
    fn rotation_flow_preserves_radius() {
        let chart = Chart::default();
        let v = VectorField::new("R", [("x".to_string(), ex("-y")), ("y".to_string(), ex("x"))].into_iter().collect());
        let env = NumericEnv::empty(1);
        let mut s = ChartSampler::new(&chart, &["x".into(), "y".into()], &BTreeMap::new(), vec![], &SamplePlan::new(7, 5), &env);
        let pts = s.points(5).unwrap();
        assert!(flow_invariance(&ex("x^2 + y^2"), &v, &chart, &pts, 0.1, &env).unwrap() < 1e-7);
        assert!(flow_invariance(&ex("x"), &v, &chart, &pts, 0.1, &env).unwrap() > 1e-3);
    }

    #[test]
    fn tree_functions_and_derivatives() {
        let mut env = NumericEnv::empty(3);
        env.define("a", &["t"], parse_tree("t^3 - 2/t").unwrap());
        assert!((env.call("a", &[], &[2.0]).unwrap() - 7.0).abs() < 1e-14);
        assert!((env.call("a", &[0, 0], &[2.0]).unwrap() - (12.0 - 0.5)).abs() < 1e-12);
        // sinusoid derivatives agree with differences
        let f = |t: f64| env.call("q", &[], &[t]).unwrap();
        let h = 1e-4;
        let fd = (f(0.7 + h) - f(0.7 - h)) / (2.0 * h);
        assert!((fd - env.call("q", &[0], &[0.7]).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn sampler_is_reproducible() {
        let chart = Chart::default();
        let env = NumericEnv::empty(0);
        let plan = SamplePlan::new(42, 3);
        let a = ChartSampler::new(&chart, &["x".into()], &BTreeMap::new(), vec![], &plan, &env).points(3).unwrap();
        let b = ChartSampler::new(&chart, &["x".into()], &BTreeMap::new(), vec![], &plan, &env).points(3).unwrap();
        assert_eq!(a, b);
    }
}
