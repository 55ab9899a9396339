//! Rewrite rules `a^n -> rhs` for a single atom `a`, and reduction modulo a rule set.
//!
//! Quadratic rules additionally rationalize denominators, so that for rule sets
//! of quadratic and linear rules on distinct atoms the reduced form is unique.
//! A linear rule on a derivative atom `D(f, i)(x)` with symbol arguments also
//! governs every higher derivative of `f` through it, by differentiating the rhs.

use std::collections::BTreeMap;

use super::atom::Atom;
use super::expr::Expr;
use super::ops::diff;
use super::poly::{Mono, Poly, Q};
use super::SymError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub lhs: Atom,
    pub power: u32,
    pub rhs: Expr,
}

impl RewriteRule {
    pub fn new(lhs: Atom, power: u32, rhs: Expr) -> Result<RewriteRule, SymError> {
        if power == 0 {
            return Err(SymError::NonTerminatingRule(lhs.to_string(), "zero power".into()));
        }
        let r = RewriteRule { lhs, power, rhs };
        if r.rhs_mentions_ruled(&r.rhs) {
            return Err(SymError::NonTerminatingRule(
                r.lhs.to_string(),
                "right-hand side contains the ruled atom".into(),
            ));
        }
        Ok(r)
    }

    /// Parse `lhs -> rhs` where lhs is an atom or an atom power.
    pub fn from_expr_pair(lhs: &Expr, rhs: Expr) -> Result<RewriteRule, SymError> {
        let err = || SymError::NonTerminatingRule(lhs.to_string(), "left-hand side must be a power of one atom".into());
        if !lhs.is_poly() || lhs.num().len() != 1 {
            return Err(err());
        }
        let (m, c) = &lhs.num().terms()[0];
        if *c != Q::from_integer(1.into()) || m.0.len() != 1 {
            return Err(err());
        }
        RewriteRule::new(m.0[0].0.clone(), m.0[0].1, rhs)
    }

    /// Atoms the rule rewrites: the lhs itself (at or above `power`), plus
    /// higher derivatives of a linear derivative-atom rule.
    fn governs(&self, a: &Atom) -> Option<Vec<u32>> {
        if *a == self.lhs {
            return Some(Vec::new());
        }
        if self.power != 1 {
            return None;
        }
        let (l, x) = (self.lhs.as_app()?, a.as_app()?);
        if l.func != x.func || l.args != x.args || l.deriv.is_empty() || x.deriv.len() <= l.deriv.len() {
            return None;
        }
        let mut extra = x.deriv.clone();
        for k in &l.deriv {
            let pos = extra.iter().position(|j| j == k)?;
            extra.remove(pos);
        }
        Some(extra)
    }

    fn rhs_mentions_ruled(&self, e: &Expr) -> bool {
        e.atoms().iter().any(|a| self.governs(a).is_some())
    }

    pub fn is_quadratic(&self) -> bool {
        self.power == 2
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<RewriteRule>,
}

impl RuleSet {
    pub fn new() -> RuleSet {
        RuleSet::default()
    }

    pub fn from_rules(rules: Vec<RewriteRule>) -> Result<RuleSet, SymError> {
        let mut s = RuleSet::new();
        for r in rules {
            s.push(r)?;
        }
        Ok(s)
    }

    /// Add a rule; rules must govern distinct atoms and no rhs may mention a governed atom.
    pub fn push(&mut self, r: RewriteRule) -> Result<(), SymError> {
        for old in &self.rules {
            if old.lhs == r.lhs {
                return Err(SymError::NonTerminatingRule(r.lhs.to_string(), "atom already has a rule".into()));
            }
            if old.rhs_mentions_ruled(&r.rhs) || r.rhs_mentions_ruled(&old.rhs) {
                return Err(SymError::NonTerminatingRule(
                    r.lhs.to_string(),
                    format!("interacts with the rule for {}", old.lhs),
                ));
            }
        }
        self.rules.push(r);
        Ok(())
    }

    pub fn extend(&mut self, other: &RuleSet) -> Result<(), SymError> {
        for r in &other.rules {
            if !self.rules.contains(r) {
                self.push(r.clone())?;
            }
        }
        Ok(())
    }

    pub fn union(&self, other: &RuleSet) -> Result<RuleSet, SymError> {
        let mut s = self.clone();
        s.extend(other)?;
        Ok(s)
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule_for(&self, a: &Atom) -> Option<&RewriteRule> {
        self.rules.iter().find(|r| r.lhs == *a)
    }

    fn touches(&self, e: &Expr) -> bool {
        e.atoms().iter().any(|a| {
            self.rules.iter().any(|r| r.governs(a).is_some())
                || a.as_app().map(|app| app.args.iter().any(|x| self.touches(x))).unwrap_or(false)
        })
    }
}

/// Normal form of `e` modulo the rules.
pub fn reduce_mod(e: &Expr, rules: &RuleSet) -> Result<Expr, SymError> {
    if rules.is_empty() || !rules.touches(e) {
        return Ok(e.clone());
    }
    let mut cur = e.clone();
    for _ in 0..64 {
        let next = reduce_step(&cur, rules)?;
        if next == cur {
            return Ok(next);
        }
        cur = next;
    }
    Err(SymError::NonTerminatingRule("rule set".into(), "reduction did not reach a fixed point".into()))
}

fn reduce_step(e: &Expr, rules: &RuleSet) -> Result<Expr, SymError> {
    // reduce inside application arguments, and replace higher derivatives of ruled atoms
    let mut err = None;
    let mut cur = e.map_atoms(&mut |a: &Atom| {
        for r in &rules.rules {
            if let Some(extra) = r.governs(a) {
                if !extra.is_empty() {
                    return match differentiate_slots(&r.rhs, r.lhs.as_app().expect("app rule").args.as_slice(), &extra) {
                        Ok(v) => Some(v),
                        Err(x) => {
                            err = Some(x);
                            None
                        }
                    };
                }
            }
        }
        let app = a.as_app()?;
        if !app.args.iter().any(|x| rules.touches(x)) {
            return None;
        }
        let mut args = Vec::with_capacity(app.args.len());
        for x in &app.args {
            match reduce_mod(x, rules) {
                Ok(v) => args.push(v),
                Err(x) => {
                    err = Some(x);
                    return None;
                }
            }
        }
        Some(Expr::atom(Atom::app(&app.func, app.deriv.clone(), args)))
    })?;
    if let Some(x) = err {
        return Err(x);
    }
    for r in &rules.rules {
        cur = reduce_powers(&cur, r)?;
    }
    for r in &rules.rules {
        if r.is_quadratic() && cur.den().contains(&r.lhs) {
            cur = rationalize(&cur, r)?;
        }
    }
    Ok(cur)
}

fn differentiate_slots(rhs: &Expr, args: &[Expr], slots: &[u32]) -> Result<Expr, SymError> {
    let mut out = rhs.clone();
    for k in slots {
        let s = args
            .get(*k as usize)
            .and_then(|x| x.as_sym())
            .ok_or_else(|| SymError::NonTerminatingRule(rhs.to_string(), "derivative rule needs symbol arguments".into()))?;
        out = diff(&out, s);
    }
    Ok(out)
}

fn reduce_poly(p: &Poly, r: &RewriteRule) -> Result<Option<Expr>, SymError> {
    if p.degree_in(&r.lhs) < r.power {
        return Ok(None);
    }
    let mut acc = Expr::zero();
    let mut pw: BTreeMap<u32, Expr> = BTreeMap::new();
    for (k, c) in p.coeffs_in(&r.lhs) {
        let (q, rem) = (k / r.power, k % r.power);
        let base = Expr::from_poly(c.mul_mono(&Mono::var(r.lhs.clone(), rem), &Q::from_integer(1.into())));
        if q == 0 {
            acc = acc.add(&base);
            continue;
        }
        let f = match pw.get(&q) {
            Some(f) => f.clone(),
            None => {
                let f = r.rhs.pow(q as i64)?;
                pw.insert(q, f.clone());
                f
            }
        };
        acc = acc.add(&base.mul(&f));
    }
    Ok(Some(acc))
}

fn reduce_powers(e: &Expr, r: &RewriteRule) -> Result<Expr, SymError> {
    let n = reduce_poly(e.num(), r)?;
    let d = reduce_poly(e.den(), r)?;
    if n.is_none() && d.is_none() {
        return Ok(e.clone());
    }
    let n = n.unwrap_or_else(|| Expr::from_poly(e.num().clone()));
    let d = d.unwrap_or_else(|| Expr::from_poly(e.den().clone()));
    n.div(&d)
}

/// Multiply through by the conjugate of the (linear in `a`) denominator.
fn rationalize(e: &Expr, r: &RewriteRule) -> Result<Expr, SymError> {
    let cs = e.den().coeffs_in(&r.lhs);
    let d0 = Expr::from_poly(cs.get(&0).cloned().unwrap_or_else(Poly::zero));
    let d1 = Expr::from_poly(cs.get(&1).cloned().unwrap_or_else(Poly::zero));
    let a = Expr::atom(r.lhs.clone());
    let conj = d0.sub(&d1.mul(&a));
    let new_den = d0.mul(&d0).sub(&d1.mul(&d1).mul(&r.rhs));
    if new_den.is_zero() {
        return Err(SymError::DivisionByZero);
    }
    let new_num = reduce_powers(&Expr::from_poly(e.num().clone()).mul(&conj), r)?;
    new_num.div(&new_den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::ex;

    fn rule(l: &str, r: &str) -> RewriteRule {
        RewriteRule::from_expr_pair(&ex(l), ex(r)).unwrap()
    }

    #[test]
    fn sphere_rule() {
        let rs = RuleSet::from_rules(vec![rule("z^2", "1 - x^2 - y^2")]).unwrap();
        assert_eq!(reduce_mod(&ex("z^2"), &rs).unwrap(), ex("1 - x^2 - y^2"));
        let e = ex("(x^2 + y^2 + z^2)^2");
        assert_eq!(reduce_mod(&e, &rs).unwrap(), Expr::one());
    }

    #[test]
    fn rationalizes_denominators() {
        let rs = RuleSet::from_rules(vec![rule("s^2", "3")]).unwrap();
        let e = reduce_mod(&ex("1/(1 + s)"), &rs).unwrap();
        assert_eq!(e, ex("(s - 1)/2"));
        let back = reduce_mod(&ex("(1 + s)*(s - 1)/2"), &rs).unwrap();
        assert_eq!(back, Expr::one());
    }

    #[test]
    fn rejects_self_reference() {
        assert!(RewriteRule::from_expr_pair(&ex("z^2"), ex("z^3 + 1")).is_err());
        assert!(RewriteRule::from_expr_pair(&ex("x*y"), ex("1")).is_err());
    }

    #[test]
    fn derivative_rule_closes_under_differentiation() {
        // b' = (c + b a')/a, so a b'' - b a'' = 0
        let lhs = ex("D(b, 0)(t)");
        let rs = RuleSet::from_rules(vec![RewriteRule::from_expr_pair(&lhs, ex("(c + b(t)*D(a, 0)(t))/a(t)")).unwrap()])
            .unwrap();
        let e = ex("a(t)*D(b, 0, 0)(t) - b(t)*D(a, 0, 0)(t)");
        assert!(reduce_mod(&e, &rs).unwrap().is_zero());
        let w = ex("a(t)*D(b, 0)(t) - b(t)*D(a, 0)(t)");
        assert_eq!(reduce_mod(&w, &rs).unwrap(), ex("c"));
    }
}
