//! Sparse multivariate polynomials over Q in graded-lex order, with exact
//! division and a recursive primitive-PRS gcd.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::atom::Atom;

pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// A power product; entries sorted by atom, exponents positive.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Mono(pub Vec<(Atom, u32)>);

impl Mono {
    pub fn one() -> Mono {
        Mono(Vec::new())
    }

    pub fn var(a: Atom, e: u32) -> Mono {
        if e == 0 {
            Mono::one()
        } else {
            Mono(vec![(a, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exp(&self, a: &Atom) -> u32 {
        self.0
            .binary_search_by(|(b, _)| b.cmp(a))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Mono(out)
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Mono) -> Option<Mono> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (a, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 == *a {
                let f = other.0[j].1;
                if f > *e {
                    return None;
                }
                if e - f > 0 {
                    out.push((a.clone(), e - f));
                }
                j += 1;
            } else if j < other.0.len() && other.0[j].0 < *a {
                return None;
            } else {
                out.push((a.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    pub fn gcd(&self, other: &Mono) -> Mono {
        let mut out = Vec::new();
        for (a, e) in &self.0 {
            let f = other.exp(a);
            if f > 0 {
                out.push((a.clone(), (*e).min(f)));
            }
        }
        Mono(out)
    }

    /// Remove atom `a` entirely, returning its exponent and the rest.
    pub fn split(&self, a: &Atom) -> (u32, Mono) {
        let mut e = 0;
        let mut rest = Vec::with_capacity(self.0.len());
        for (b, k) in &self.0 {
            if b == a {
                e = *k;
            } else {
                rest.push((b.clone(), *k));
            }
        }
        (e, Mono(rest))
    }

    pub fn with_exp(&self, a: &Atom, e: u32) -> Mono {
        let (_, rest) = self.split(a);
        rest.mul(&Mono::var(a.clone(), e))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded lex; among equal degrees the power product with the larger exponent
/// on the earliest atom is larger.
impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        for (x, y) in self.0.iter().zip(other.0.iter()) {
            match x.0.cmp(&y.0) {
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => match x.1.cmp(&y.1) {
                    Ordering::Equal => {}
                    o => return o,
                },
            }
        }
        self.0.len().cmp(&other.0.len()).reverse()
    }
}

/// Terms sorted by decreasing monomial, coefficients nonzero.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Default)]
pub struct Poly {
    terms: Vec<(Mono, Q)>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(Mono::one(), c)] }
        }
    }

    pub fn atom(a: Atom) -> Poly {
        Poly { terms: vec![(Mono::var(a, 1), Q::one())] }
    }

    pub fn term(m: Mono, c: Q) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    /// Build from arbitrary (possibly repeated, unsorted) terms.
    pub fn from_terms<I: IntoIterator<Item = (Mono, Q)>>(it: I) -> Poly {
        let mut acc: BTreeMap<Mono, Q> = BTreeMap::new();
        for (m, c) in it {
            if c.is_zero() {
                continue;
            }
            match acc.get_mut(&m) {
                Some(v) => *v += c,
                None => {
                    acc.insert(m, c);
                }
            }
        }
        let terms = acc.into_iter().rev().filter(|(_, c)| !c.is_zero()).collect();
        Poly { terms }
    }

    pub fn terms(&self) -> &[(Mono, Q)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn is_const(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn const_value(&self) -> Option<Q> {
        if self.terms.is_empty() {
            Some(Q::zero())
        } else if self.is_const() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn lc(&self) -> Q {
        self.terms.first().map(|t| t.1.clone()).unwrap_or_else(Q::zero)
    }

    pub fn lm(&self) -> Option<&Mono> {
        self.terms.first().map(|t| &t.0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn atoms(&self) -> Vec<Atom> {
        let mut v: Vec<Atom> = Vec::new();
        for (m, _) in &self.terms {
            for (a, _) in &m.0 {
                v.push(a.clone());
            }
        }
        v.sort();
        v.dedup();
        v
    }

    pub fn degree_in(&self, a: &Atom) -> u32 {
        self.terms.iter().map(|(m, _)| m.exp(a)).max().unwrap_or(0)
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.terms.iter().any(|(m, _)| m.exp(a) > 0)
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul_mono(&self, m: &Mono, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        // multiplication by a monomial preserves the order
        Poly { terms: self.terms.iter().map(|(n, c)| (n.mul(m), c * k)).collect() }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.merge(other, false)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.merge(other, true)
    }

    fn merge(&self, other: &Poly, negate: bool) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let a = &self.terms;
        let b = &other.terms;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    let c = if negate { -&b[j].1 } else { b[j].1.clone() };
                    out.push((b[j].0.clone(), c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        for t in &b[j..] {
            let c = if negate { -&t.1 } else { t.1.clone() };
            out.push((t.0.clone(), c));
        }
        Poly { terms: out }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.const_value() {
            return other.scale(&c);
        }
        if let Some(c) = other.const_value() {
            return self.scale(&c);
        }
        let (small, big) = if self.terms.len() <= other.terms.len() { (self, other) } else { (other, self) };
        let mut acc = Poly::zero();
        for (m, c) in &small.terms {
            acc = acc.add(&big.mul_mono(m, c));
        }
        acc
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Partial derivative with respect to an atom treated as an independent variable.
    pub fn diff_atom(&self, a: &Atom) -> Poly {
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            let e = m.exp(a);
            if e > 0 {
                out.push((m.with_exp(a, e - 1), c * q_int(e as i64)));
            }
        }
        Poly::from_terms(out)
    }

    /// Coefficients with respect to `a`: pairs (exponent, coefficient free of `a`).
    pub fn coeffs_in(&self, a: &Atom) -> BTreeMap<u32, Poly> {
        let mut groups: BTreeMap<u32, Vec<(Mono, Q)>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (e, rest) = m.split(a);
            groups.entry(e).or_default().push((rest, c.clone()));
        }
        groups.into_iter().map(|(e, ts)| (e, Poly::from_terms(ts))).collect()
    }

    pub fn from_coeffs_in(a: &Atom, coeffs: &BTreeMap<u32, Poly>) -> Poly {
        let mut terms = Vec::new();
        for (e, p) in coeffs {
            for (m, c) in &p.terms {
                terms.push((m.mul(&Mono::var(a.clone(), *e)), c.clone()));
            }
        }
        Poly::from_terms(terms)
    }

    /// Exact quotient, or None when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.const_value() {
            return Some(self.scale(&(Q::one() / c)));
        }
        let (dm, dc) = (d.terms[0].0.clone(), d.terms[0].1.clone());
        let mut r = self.clone();
        let mut q: Vec<(Mono, Q)> = Vec::new();
        while !r.is_zero() {
            let (rm, rc) = (&r.terms[0].0, &r.terms[0].1);
            let t = rm.div(&dm)?;
            let k = rc / &dc;
            r = r.sub(&d.mul_mono(&t, &k));
            q.push((t, k));
        }
        Some(Poly::from_terms(q))
    }

    /// The positive rational `k` with `self / k` having coprime integer coefficients
    /// and positive leading coefficient times the sign of the leading coefficient.
    pub fn rational_content(&self) -> Q {
        if self.is_zero() {
            return Q::one();
        }
        let mut num_g = BigInt::zero();
        let mut den_l = BigInt::one();
        for (_, c) in &self.terms {
            num_g = num_g.gcd(c.numer());
            den_l = den_l.lcm(c.denom());
        }
        let mut k = Q::new(num_g, den_l);
        if self.lc().is_negative() {
            k = -k;
        }
        k
    }

    /// Integer, content-free, positive leading coefficient.
    pub fn primitive(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let k = self.rational_content();
        self.scale(&(Q::one() / k))
    }

    /// Greatest monomial dividing every term.
    pub fn mono_content(&self) -> Mono {
        let mut it = self.terms.iter();
        let first = match it.next() {
            Some(t) => t.0.clone(),
            None => return Mono::one(),
        };
        let mut g = first;
        for (m, _) in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    pub fn div_mono(&self, m: &Mono) -> Poly {
        if m.is_one() {
            return self.clone();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(n, c)| (n.div(m).expect("monomial divides every term"), c.clone()))
                .collect(),
        }
    }

    /// Substitute polynomials for atoms (atoms absent from the map are kept).
    pub fn map_terms<F: FnMut(&Mono, &Q) -> Poly>(&self, mut f: F) -> Poly {
        let mut acc = Poly::zero();
        for (m, c) in &self.terms {
            acc = acc.add(&f(m, c));
        }
        acc
    }
}

/// gcd over Q, normalized to be integer-primitive with positive leading coefficient.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive();
    }
    if b.is_zero() {
        return a.primitive();
    }
    if a.is_const() || b.is_const() {
        return Poly::one();
    }
    if a == b {
        return a.primitive();
    }
    let ma = a.mono_content();
    let mb = b.mono_content();
    let mg = ma.gcd(&mb);
    let a1 = a.div_mono(&ma);
    let b1 = b.div_mono(&mb);
    let g = gcd_no_mono(&a1, &b1);
    g.mul_mono(&mg, &Q::one()).primitive()
}

fn gcd_no_mono(a: &Poly, b: &Poly) -> Poly {
    if a.is_const() || b.is_const() {
        return Poly::one();
    }
    if a.primitive() == b.primitive() {
        return a.primitive();
    }
    let va = a.atoms();
    let vb = b.atoms();
    // a variable in only one argument: the gcd divides each of its coefficients
    if let Some(x) = va.iter().find(|x| vb.binary_search(x).is_err()) {
        return gcd_with_coeffs(b, a, x);
    }
    if let Some(x) = vb.iter().find(|x| va.binary_search(x).is_err()) {
        return gcd_with_coeffs(a, b, x);
    }
    // common variable of least combined degree
    let x = va
        .iter()
        .min_by_key(|x| (a.degree_in(x) + b.degree_in(x), (*x).clone()))
        .expect("nonconstant")
        .clone();
    let ca = content_in(a, &x);
    let cb = content_in(b, &x);
    let c = gcd(&ca, &cb);
    let mut p = a.div_exact(&ca).expect("content divides");
    let mut q = b.div_exact(&cb).expect("content divides");
    if p.degree_in(&x) < q.degree_in(&x) {
        std::mem::swap(&mut p, &mut q);
    }
    loop {
        let r = prem(&p, &q, &x);
        if r.is_zero() {
            break;
        }
        if r.degree_in(&x) == 0 {
            q = Poly::one();
            break;
        }
        let cr = content_in(&r, &x);
        let r = r.div_exact(&cr).expect("content divides").primitive();
        p = q;
        q = r;
    }
    c.mul(&q).primitive()
}

fn gcd_with_coeffs(g0: &Poly, p: &Poly, x: &Atom) -> Poly {
    let mut g = g0.primitive();
    for (_, c) in p.coeffs_in(x) {
        g = gcd(&g, &c);
        if g.is_const() {
            return Poly::one();
        }
    }
    g
}

/// gcd of the coefficients of `p` viewed as a polynomial in `x`.
pub fn content_in(p: &Poly, x: &Atom) -> Poly {
    let mut g = Poly::zero();
    for (_, c) in p.coeffs_in(x) {
        g = gcd(&g, &c);
        if g.is_const() {
            return Poly::one();
        }
    }
    g
}

/// A pseudo-remainder of `a` by `b` in the variable `x`.
fn prem(a: &Poly, b: &Poly, x: &Atom) -> Poly {
    let db = b.degree_in(x);
    let bc = b.coeffs_in(x);
    let lb = bc.get(&db).cloned().unwrap_or_else(Poly::zero);
    let mut r = a.clone();
    loop {
        if r.is_zero() {
            return r;
        }
        let dr = r.degree_in(x);
        if dr < db {
            return r;
        }
        let lr = r.coeffs_in(x).remove(&dr).unwrap_or_else(Poly::zero);
        let shift = Poly::term(Mono::var(x.clone(), dr - db), Q::one());
        r = lb.mul(&r).sub(&lr.mul(&shift).mul(b));
        let k = r.rational_content();
        if !r.is_zero() {
            r = r.scale(&(Q::one() / k));
        }
    }
}

pub fn lcm(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() || b.is_zero() {
        return Poly::zero();
    }
    let g = gcd(a, b);
    a.div_exact(&g).expect("gcd divides").mul(b).primitive()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Poly {
        Poly::atom(Atom::sym(n))
    }

    #[test]
    fn grlex_order() {
        let x = Atom::sym("x");
        let y = Atom::sym("y");
        let x2 = Mono::var(x.clone(), 2);
        let xy = Mono::var(x.clone(), 1).mul(&Mono::var(y.clone(), 1));
        let y2 = Mono::var(y.clone(), 2);
        let x1 = Mono::var(x, 1);
        assert!(x2 > xy && xy > y2 && y2 > x1);
    }

    #[test]
    fn gcd_univariate_and_multivariate() {
        let x = v("x");
        let y = v("y");
        let one = Poly::one();
        let a = x.mul(&x).sub(&one); // x^2-1
        let b = x.sub(&one);
        assert_eq!(gcd(&a, &b), b);
        let f = x.add(&y).mul(&x.sub(&y.scale(&q_int(2))));
        let g = x.add(&y).mul(&y.add(&one));
        assert_eq!(gcd(&f, &g), x.add(&y));
        let h = x.mul(&y).add(&one);
        assert!(gcd(&f, &h).is_one());
    }

    #[test]
    fn exact_division() {
        let x = v("x");
        let y = v("y");
        let p = x.add(&y).pow(3);
        let q = p.div_exact(&x.add(&y)).unwrap();
        assert_eq!(q, x.add(&y).pow(2));
        assert!(x.div_exact(&y).is_none());
    }
}
