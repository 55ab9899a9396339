//! Canonical expressions: reduced quotients of polynomials over atoms.
//!
//! The denominator is integer-primitive with a positive leading coefficient and
//! shares no factor with the numerator, so equal rational expressions have equal
//! representations.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::atom::{Atom, AtomData};
use super::poly::{gcd, q_int, Mono, Poly, Q};
use super::SymError;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr {
    num: Arc<Poly>,
    den: Arc<Poly>,
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::from_poly(Poly::zero())
    }

    pub fn one() -> Expr {
        Expr::from_poly(Poly::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(q_int(n))
    }

    pub fn rat(p: i64, q: i64) -> Expr {
        Expr::constant(q_int(p) / q_int(q))
    }

    pub fn constant(c: Q) -> Expr {
        Expr::from_poly(Poly::constant(c))
    }

    pub fn sym(name: &str) -> Expr {
        Expr::atom(Atom::sym(name))
    }

    pub fn atom(a: Atom) -> Expr {
        Expr::from_poly(Poly::atom(a))
    }

    pub fn app(func: &str, args: Vec<Expr>) -> Expr {
        Expr::atom(Atom::app(func, Vec::new(), args))
    }

    pub fn from_poly(p: Poly) -> Expr {
        Expr { num: Arc::new(p), den: Arc::new(Poly::one()) }
    }

    /// Reduce `n/d` to canonical form.
    pub fn quotient(n: Poly, d: Poly) -> Result<Expr, SymError> {
        if d.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        if n.is_zero() {
            return Ok(Expr::zero());
        }
        if let Some(c) = d.const_value() {
            return Ok(Expr::from_poly(n.scale(&(Q::one() / c))));
        }
        let g = gcd(&n, &d);
        let (n, d) = if g.is_const() {
            (n, d)
        } else {
            (n.div_exact(&g).expect("gcd divides"), d.div_exact(&g).expect("gcd divides"))
        };
        Ok(Expr::normalized(n, d))
    }

    /// `n/d` already coprime; fix the scalar normalization only.
    fn normalized(n: Poly, d: Poly) -> Expr {
        if let Some(c) = d.const_value() {
            return Expr::from_poly(n.scale(&(Q::one() / c)));
        }
        let k = d.rational_content();
        let inv = Q::one() / &k;
        Expr { num: Arc::new(n.scale(&inv)), den: Arc::new(d.scale(&inv)) }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_poly(&self) -> bool {
        self.den.is_one()
    }

    pub fn const_value(&self) -> Option<Q> {
        if self.den.is_one() {
            self.num.const_value()
        } else {
            None
        }
    }

    pub fn is_const(&self) -> bool {
        self.const_value().is_some()
    }

    /// The atom if this expression is exactly one atom.
    pub fn as_atom(&self) -> Option<&Atom> {
        if !self.den.is_one() || self.num.len() != 1 {
            return None;
        }
        let (m, c) = &self.num.terms()[0];
        if c.is_one() && m.0.len() == 1 && m.0[0].1 == 1 {
            Some(&m.0[0].0)
        } else {
            None
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        self.as_atom().and_then(|a| a.as_sym())
    }

    pub fn add(&self, o: &Expr) -> Expr {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den.is_one() && o.den.is_one() {
            return Expr::from_poly(self.num.add(&o.num));
        }
        if self.den == o.den {
            return Expr::quotient(self.num.add(&o.num), (*self.den).clone()).expect("nonzero den");
        }
        let g = gcd(&self.den, &o.den);
        let b1 = self.den.div_exact(&g).expect("gcd divides");
        let d1 = o.den.div_exact(&g).expect("gcd divides");
        let n = self.num.mul(&d1).add(&o.num.mul(&b1));
        let d = b1.mul(&o.den);
        Expr::quotient(n, d).expect("nonzero den")
    }

    pub fn neg(&self) -> Expr {
        Expr { num: Arc::new(self.num.neg()), den: self.den.clone() }
    }

    pub fn sub(&self, o: &Expr) -> Expr {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Expr) -> Expr {
        if self.is_zero() || o.is_zero() {
            return Expr::zero();
        }
        if self.den.is_one() && o.den.is_one() {
            return Expr::from_poly(self.num.mul(&o.num));
        }
        if let Some(c) = self.const_value() {
            return o.scale(&c);
        }
        if let Some(c) = o.const_value() {
            return self.scale(&c);
        }
        let g1 = gcd(&self.num, &o.den);
        let g2 = gcd(&o.num, &self.den);
        let a = self.num.div_exact(&g1).expect("gcd divides");
        let d = o.den.div_exact(&g1).expect("gcd divides");
        let c = o.num.div_exact(&g2).expect("gcd divides");
        let b = self.den.div_exact(&g2).expect("gcd divides");
        Expr::normalized(a.mul(&c), b.mul(&d))
    }

    pub fn scale(&self, k: &Q) -> Expr {
        if k.is_zero() {
            return Expr::zero();
        }
        Expr { num: Arc::new(self.num.scale(k)), den: self.den.clone() }
    }

    pub fn inv(&self) -> Result<Expr, SymError> {
        if self.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        Ok(Expr::normalized_sign((*self.den).clone(), (*self.num).clone()))
    }

    fn normalized_sign(n: Poly, d: Poly) -> Expr {
        Expr::normalized(n, d)
    }

    pub fn div(&self, o: &Expr) -> Result<Expr, SymError> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, n: i64) -> Result<Expr, SymError> {
        if n == 0 {
            return Ok(Expr::one());
        }
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let k = n.unsigned_abs() as u32;
        if base.den.is_one() {
            return Ok(Expr::from_poly(base.num.pow(k)));
        }
        Ok(Expr::normalized(base.num.pow(k), base.den.pow(k)))
    }

    /// All atoms at top level (application arguments are not entered).
    pub fn atoms(&self) -> Vec<Atom> {
        let mut v = self.num.atoms();
        v.extend(self.den.atoms());
        v.sort();
        v.dedup();
        v
    }

    /// Every symbol name occurring anywhere, including inside application arguments.
    pub fn free_symbols(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in self.atoms() {
            collect_symbols(&a, &mut out);
        }
        out.sort();
        out.dedup();
        out
    }

    /// Every application atom occurring anywhere (nested ones included).
    pub fn applications(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        for a in self.atoms() {
            collect_apps(&a, &mut out);
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.atoms().iter().any(|a| a.mentions(name))
    }

    pub fn contains_atom(&self, a: &Atom) -> bool {
        self.num.contains(a) || self.den.contains(a)
    }

    /// Partial derivative with respect to an atom, all other atoms held fixed.
    pub fn diff_atom(&self, a: &Atom) -> Expr {
        let dn = self.num.diff_atom(a);
        if self.den.is_one() {
            return Expr::from_poly(dn);
        }
        let dd = self.den.diff_atom(a);
        if dd.is_zero() {
            return Expr::quotient(dn, (*self.den).clone()).expect("nonzero den");
        }
        let n = dn.mul(&self.den).sub(&self.num.mul(&dd));
        Expr::quotient(n, self.den.mul(&self.den)).expect("nonzero den")
    }

    /// Replace atoms through `f` (returning None keeps the atom); exact rational recomposition.
    pub fn map_atoms<F>(&self, f: &mut F) -> Result<Expr, SymError>
    where
        F: FnMut(&Atom) -> Option<Expr>,
    {
        let atoms = self.atoms();
        let mut table: BTreeMap<Atom, Expr> = BTreeMap::new();
        for a in atoms {
            if let Some(e) = f(&a) {
                table.insert(a, e);
            }
        }
        if table.is_empty() {
            return Ok(self.clone());
        }
        let n = eval_poly_with(&self.num, &table)?;
        if self.den.is_one() {
            return Ok(n);
        }
        let d = eval_poly_with(&self.den, &table)?;
        n.div(&d)
    }

    pub fn size(&self) -> usize {
        self.num.len() + self.den.len()
    }

    /// Total degree of the numerator minus that of the denominator is not meaningful
    /// in general; this reports the larger of the two.
    pub fn degree(&self) -> u32 {
        self.num.total_degree().max(self.den.total_degree())
    }
}

fn collect_symbols(a: &Atom, out: &mut Vec<String>) {
    match a.data() {
        AtomData::Sym(s) => out.push(s.clone()),
        AtomData::App(app) => {
            for e in &app.args {
                for b in e.atoms() {
                    collect_symbols(&b, out);
                }
            }
        }
    }
}

fn collect_apps(a: &Atom, out: &mut Vec<Atom>) {
    if let AtomData::App(app) = a.data() {
        out.push(a.clone());
        for e in &app.args {
            for b in e.atoms() {
                collect_apps(&b, out);
            }
        }
    }
}

/// Evaluate a polynomial with some atoms replaced by expressions.
pub fn eval_poly_with(p: &Poly, table: &BTreeMap<Atom, Expr>) -> Result<Expr, SymError> {
    let mut kept: Vec<(Mono, Q)> = Vec::new();
    let mut acc = Expr::zero();
    let mut power_cache: BTreeMap<(Atom, u32), Expr> = BTreeMap::new();
    for (m, c) in p.terms() {
        let mut rest = Vec::new();
        let mut factor = Expr::constant(c.clone());
        let mut touched = false;
        for (a, e) in &m.0 {
            if let Some(v) = table.get(a) {
                touched = true;
                let key = (a.clone(), *e);
                let pw = match power_cache.get(&key) {
                    Some(pw) => pw.clone(),
                    None => {
                        let pw = v.pow(*e as i64)?;
                        power_cache.insert(key, pw.clone());
                        pw
                    }
                };
                factor = factor.mul(&pw);
            } else {
                rest.push((a.clone(), *e));
            }
        }
        if touched {
            acc = acc.add(&factor.mul(&Expr::from_poly(Poly::term(Mono(rest), Q::one()))));
        } else {
            kept.push((m.clone(), c.clone()));
        }
    }
    Ok(acc.add(&Expr::from_poly(Poly::from_terms(kept))))
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::print::render(self, None))
    }
}

pub(crate) fn fmt_q(c: &Q) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $call:ident) => {
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr {
                Expr::$call(self, o)
            }
        }
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr::$call(&self, &o)
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr {
                Expr::$call(&self, o)
            }
        }
    };
}
binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}
impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
