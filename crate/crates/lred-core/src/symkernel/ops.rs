use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;

use super::atom::{Atom, AtomData};
use super::expr::Expr;
use super::poly::Poly;
use super::SymError;

/// Apply a derivation determined by its values on atoms: `sum_a (de/da) * delta(a)`.
pub fn derive_with<F>(e: &Expr, delta: &mut F) -> Expr
where
    F: FnMut(&Atom) -> Expr,
{
    let atoms = e.atoms();
    let mut deltas: Vec<(Atom, Expr)> = Vec::new();
    for a in atoms {
        let d = delta(&a);
        if !d.is_zero() {
            deltas.push((a, d));
        }
    }
    if deltas.is_empty() {
        return Expr::zero();
    }
    let dpoly = |p: &Poly, deltas: &[(Atom, Expr)]| -> Expr {
        let mut acc = Expr::zero();
        for (a, d) in deltas {
            let pa = p.diff_atom(a);
            if !pa.is_zero() {
                acc = acc.add(&Expr::from_poly(pa).mul(d));
            }
        }
        acc
    };
    let dn = dpoly(e.num(), &deltas);
    if e.den().is_one() {
        return dn;
    }
    let dd = dpoly(e.den(), &deltas);
    let den = Expr::from_poly(e.den().clone());
    let num = Expr::from_poly(e.num().clone());
    // (n/d)' = n'/d - n d'/d^2
    let t1 = dn.div(&den).expect("nonzero den");
    if dd.is_zero() {
        return t1;
    }
    let t2 = num.mul(&dd).div(&den.mul(&den)).expect("nonzero den");
    t1.sub(&t2)
}

/// Derivative of an atom with respect to a symbol, all other symbols independent.
fn atom_partial(a: &Atom, s: &str) -> Expr {
    match a.data() {
        AtomData::Sym(n) => {
            if n == s {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        AtomData::App(app) => {
            let mut acc = Expr::zero();
            for (k, arg) in app.args.iter().enumerate() {
                if !arg.mentions(s) {
                    continue;
                }
                let da = diff(arg, s);
                if da.is_zero() {
                    continue;
                }
                let d = a.derivative_in_slot(k as u32).expect("application");
                acc = acc.add(&Expr::atom(d).mul(&da));
            }
            acc
        }
    }
}

/// Partial derivative treating every other symbol as independent; applications
/// differentiate through their arguments into derivative atoms.
pub fn diff(e: &Expr, s: &str) -> Expr {
    if !e.mentions(s) {
        return Expr::zero();
    }
    derive_with(e, &mut |a: &Atom| atom_partial(a, s))
}

/// Simultaneous substitution of symbols, also inside application arguments.
pub fn substitute(e: &Expr, bindings: &BTreeMap<String, Expr>) -> Result<Expr, SymError> {
    check_acyclic(bindings)?;
    subst_inner(e, bindings)
}

fn subst_inner(e: &Expr, bindings: &BTreeMap<String, Expr>) -> Result<Expr, SymError> {
    let mut err = None;
    let out = e.map_atoms(&mut |a: &Atom| match a.data() {
        AtomData::Sym(n) => bindings.get(n).cloned(),
        AtomData::App(app) => {
            if !app.args.iter().any(|x| bindings.keys().any(|k| x.mentions(k))) {
                return None;
            }
            let mut args = Vec::new();
            for x in &app.args {
                match subst_inner(x, bindings) {
                    Ok(v) => args.push(v),
                    Err(x) => {
                        err = Some(x);
                        return None;
                    }
                }
            }
            Some(Expr::atom(Atom::app(&app.func, app.deriv.clone(), args)))
        }
    })?;
    match err {
        Some(x) => Err(x),
        None => Ok(out),
    }
}

/// Substitution of whole atoms (applications included), not entering arguments.
pub fn substitute_atoms(e: &Expr, bindings: &BTreeMap<Atom, Expr>) -> Result<Expr, SymError> {
    e.map_atoms(&mut |a: &Atom| bindings.get(a).cloned())
}

fn check_acyclic(bindings: &BTreeMap<String, Expr>) -> Result<(), SymError> {
    // edges s -> t when the value bound to s mentions another bound symbol t
    let mut graph: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (s, v) in bindings {
        if v.as_sym() == Some(s.as_str()) {
            continue;
        }
        let syms: BTreeSet<String> = v.free_symbols().into_iter().collect();
        let mut out = Vec::new();
        for t in bindings.keys() {
            if syms.contains(t) {
                if bindings[t].as_sym() == Some(t.as_str()) && t != s {
                    continue;
                }
                out.push(t.as_str());
            }
        }
        graph.insert(s.as_str(), out);
    }
    fn visit<'a>(
        n: &'a str,
        g: &BTreeMap<&'a str, Vec<&'a str>>,
        state: &mut BTreeMap<&'a str, u8>,
    ) -> Result<(), SymError> {
        match state.get(n) {
            Some(1) => return Err(SymError::CyclicSubstitution(n.to_string())),
            Some(2) => return Ok(()),
            _ => {}
        }
        state.insert(n, 1);
        if let Some(next) = g.get(n) {
            for m in next {
                visit(m, g, state)?;
            }
        }
        state.insert(n, 2);
        Ok(())
    }
    let mut state = BTreeMap::new();
    for n in graph.keys() {
        visit(n, &graph, &mut state)?;
    }
    Ok(())
}

/// Numeric values of opaque functions and their derivatives.
pub trait NumericFns {
    /// Value of `func` differentiated in the slots `deriv` at `args`.
    fn call(&self, func: &str, deriv: &[u32], args: &[f64]) -> Result<f64, SymError>;
}

impl NumericFns for () {
    fn call(&self, func: &str, _: &[u32], _: &[f64]) -> Result<f64, SymError> {
        Err(SymError::UnboundFunction(func.to_string()))
    }
}

/// Double-precision evaluation with a fixed operand order.
pub fn eval_numeric(e: &Expr, point: &BTreeMap<String, f64>, fns: &dyn NumericFns) -> Result<f64, SymError> {
    let mut cache: BTreeMap<Atom, f64> = BTreeMap::new();
    let n = eval_poly(e.num(), point, fns, &mut cache)?;
    if e.den().is_one() {
        return Ok(n);
    }
    let d = eval_poly(e.den(), point, fns, &mut cache)?;
    let scale = n.abs().max(1.0);
    if d.abs() <= 1e-300 * scale || !d.is_finite() {
        return Err(SymError::NumericDomain(format!("denominator {} vanishes", e.den().terms().len())));
    }
    Ok(n / d)
}

fn eval_atom(
    a: &Atom,
    point: &BTreeMap<String, f64>,
    fns: &dyn NumericFns,
    cache: &mut BTreeMap<Atom, f64>,
) -> Result<f64, SymError> {
    if let Some(v) = cache.get(a) {
        return Ok(*v);
    }
    let v = match a.data() {
        AtomData::Sym(s) => *point.get(s).ok_or_else(|| SymError::UnboundSymbol(s.clone()))?,
        AtomData::App(app) => {
            let mut args = Vec::with_capacity(app.args.len());
            for x in &app.args {
                args.push(eval_numeric(x, point, fns)?);
            }
            fns.call(&app.func, &app.deriv, &args)?
        }
    };
    cache.insert(a.clone(), v);
    Ok(v)
}

fn eval_poly(
    p: &Poly,
    point: &BTreeMap<String, f64>,
    fns: &dyn NumericFns,
    cache: &mut BTreeMap<Atom, f64>,
) -> Result<f64, SymError> {
    let mut acc = 0.0;
    for (m, c) in p.terms() {
        let mut t = c.to_f64().unwrap_or(f64::NAN);
        for (a, e) in &m.0 {
            t *= eval_atom(a, point, fns, cache)?.powi(*e as i32);
        }
        acc += t;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::ex;

    #[test]
    fn diff_basics() {
        assert_eq!(diff(&ex("x^2 + y^2"), "x"), ex("2*x"));
        assert_eq!(diff(&ex("A(t, r)*x"), "r"), ex("D(A, 1)(t, r)*x"));
        assert_eq!(diff(&ex("f(x^2)"), "x"), ex("2*x*D(f, 0)(x^2)"));
    }

    #[test]
    fn substitution() {
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), ex("y + 1"));
        assert_eq!(substitute(&ex("x^2 + f(x)"), &b).unwrap(), ex("(y + 1)^2 + f(y + 1)"));
        let mut id = BTreeMap::new();
        id.insert("x".to_string(), ex("x"));
        assert_eq!(substitute(&ex("x*y"), &id).unwrap(), ex("x*y"));
        let mut cyc = BTreeMap::new();
        cyc.insert("x".to_string(), ex("y"));
        cyc.insert("y".to_string(), ex("x"));
        assert!(matches!(substitute(&ex("x"), &cyc), Err(SymError::CyclicSubstitution(_))));
    }

    #[test]
    fn numeric() {
        let mut p = BTreeMap::new();
        p.insert("x".to_string(), 3.0);
        p.insert("y".to_string(), 4.0);
        assert_eq!(eval_numeric(&ex("x^2 + y^2"), &p, &()).unwrap(), 25.0);
        assert!(matches!(eval_numeric(&ex("z"), &p, &()), Err(SymError::UnboundSymbol(_))));
    }
}
