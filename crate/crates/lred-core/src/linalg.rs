//! Exact linear algebra over the field of canonical expressions modulo a rule set.
//!
//! Elimination is sparse Gauss-Jordan with the leftmost nonzero column of each row
//! as its pivot, so a null-space vector indexed by a free column only involves
//! that column and columns to its left.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::symkernel::{reduce_mod, Expr, RuleSet, SymError};

/// Cooperative cancellation flag shared between a driver and long eliminations.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> CancelToken {
        CancelToken::default()
    }
    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed)
    }
    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum LinalgError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("cancelled")]
    Cancelled,
}

/// The scalar field: canonical expressions reduced modulo `rules`.
#[derive(Debug, Clone, Default)]
pub struct Field {
    pub rules: RuleSet,
}

impl Field {
    pub fn new(rules: RuleSet) -> Field {
        Field { rules }
    }

    pub fn norm(&self, e: &Expr) -> Result<Expr, SymError> {
        reduce_mod(e, &self.rules)
    }

    pub fn is_zero(&self, e: &Expr) -> Result<bool, SymError> {
        Ok(e.is_zero() || self.norm(e)?.is_zero())
    }

    pub fn mul(&self, a: &Expr, b: &Expr) -> Result<Expr, SymError> {
        self.norm(&a.mul(b))
    }

    pub fn div(&self, a: &Expr, b: &Expr) -> Result<Expr, SymError> {
        self.norm(&a.div(b)?)
    }
}

pub type SparseRow = BTreeMap<usize, Expr>;

/// Incremental reduced row echelon form.
#[derive(Debug, Clone, Default)]
pub struct Echelon {
    /// pivot column -> row normalized to 1 at the pivot, free of other pivot columns
    pub rows: BTreeMap<usize, SparseRow>,
}

impl Echelon {
    pub fn new() -> Echelon {
        Echelon::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows.keys().copied().collect()
    }

    /// Reduce a row against the current pivots.
    pub fn reduce(&self, row: &SparseRow, f: &Field) -> Result<SparseRow, SymError> {
        let mut row = clean(row, f)?;
        let cols: Vec<usize> = row.keys().copied().filter(|c| self.rows.contains_key(c)).collect();
        for c in cols {
            let k = match row.get(&c) {
                Some(k) => k.clone(),
                None => continue,
            };
            let prow = &self.rows[&c];
            for (j, v) in prow {
                let nv = row.get(j).cloned().unwrap_or_else(Expr::zero).sub(&f.mul(&k, v)?);
                let nv = f.norm(&nv)?;
                if nv.is_zero() {
                    row.remove(j);
                } else {
                    row.insert(*j, nv);
                }
            }
        }
        Ok(row)
    }

    /// Insert a row; returns its new pivot column, or None if it was dependent.
    pub fn insert(&mut self, row: &SparseRow, f: &Field) -> Result<Option<usize>, SymError> {
        let row = self.reduce(row, f)?;
        let (&p, pv) = match row.iter().next() {
            Some(x) => x,
            None => return Ok(None),
        };
        let inv = pv.inv()?;
        let mut nrow = SparseRow::new();
        for (j, v) in &row {
            let nv = if *j == p { Expr::one() } else { f.mul(v, &inv)? };
            nrow.insert(*j, nv);
        }
        // keep the other pivot rows free of the new pivot column
        for r in self.rows.values_mut() {
            if let Some(k) = r.get(&p).cloned() {
                for (j, v) in &nrow {
                    let nv = r.get(j).cloned().unwrap_or_else(Expr::zero).sub(&f.mul(&k, v)?);
                    let nv = f.norm(&nv)?;
                    if nv.is_zero() {
                        r.remove(j);
                    } else {
                        r.insert(*j, nv);
                    }
                }
            }
        }
        self.rows.insert(p, nrow);
        Ok(Some(p))
    }

    /// Basis of the null space over `ncols` columns, one vector per free column, in column order.
    pub fn null_space(&self, ncols: usize) -> Vec<(usize, Vec<Expr>)> {
        let mut out = Vec::new();
        for f in 0..ncols {
            if self.rows.contains_key(&f) {
                continue;
            }
            let mut v = vec![Expr::zero(); ncols];
            v[f] = Expr::one();
            for (p, r) in &self.rows {
                if let Some(x) = r.get(&f) {
                    v[*p] = x.neg();
                }
            }
            out.push((f, v));
        }
        out
    }
}

fn clean(row: &SparseRow, f: &Field) -> Result<SparseRow, SymError> {
    let mut out = SparseRow::new();
    for (j, v) in row {
        let v = f.norm(v)?;
        if !v.is_zero() {
            out.insert(*j, v);
        }
    }
    Ok(out)
}

pub fn dense_to_sparse(row: &[Expr]) -> SparseRow {
    row.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(j, v)| (j, v.clone())).collect()
}

pub fn echelon_of(rows: &[Vec<Expr>], f: &Field, cancel: Option<&CancelToken>) -> Result<Echelon, LinalgError> {
    let mut e = Echelon::new();
    for r in rows {
        if cancel.map(|c| c.is_cancelled()).unwrap_or(false) {
            return Err(LinalgError::Cancelled);
        }
        e.insert(&dense_to_sparse(r), f)?;
    }
    Ok(e)
}

pub fn rank(rows: &[Vec<Expr>], f: &Field) -> Result<usize, SymError> {
    let mut e = Echelon::new();
    for r in rows {
        e.insert(&dense_to_sparse(r), f)?;
    }
    Ok(e.rank())
}

/// Null space of the matrix (vectors x with rows . x = 0).
pub fn null_space(rows: &[Vec<Expr>], ncols: usize, f: &Field) -> Result<Vec<Vec<Expr>>, SymError> {
    let mut e = Echelon::new();
    for r in rows {
        e.insert(&dense_to_sparse(r), f)?;
    }
    Ok(e.null_space(ncols).into_iter().map(|(_, v)| v).collect())
}

/// Kernel of the transpose: combinations y with sum_i y_i rows_i = 0.
pub fn left_null_space(rows: &[Vec<Expr>], ncols: usize, f: &Field) -> Result<Vec<Vec<Expr>>, SymError> {
    let t = transpose(rows, ncols);
    null_space(&t, rows.len(), f)
}

pub fn transpose(rows: &[Vec<Expr>], ncols: usize) -> Vec<Vec<Expr>> {
    (0..ncols).map(|j| rows.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Solve `sum_j x_j cols_j = b` for x; None if inconsistent. Free unknowns are set to 0.
pub fn solve_columns(cols: &[Vec<Expr>], b: &[Expr], f: &Field) -> Result<Option<Vec<Expr>>, SymError> {
    let n = cols.len();
    let m = b.len();
    let mut e = Echelon::new();
    for i in 0..m {
        let mut row = SparseRow::new();
        for (j, c) in cols.iter().enumerate() {
            if !c[i].is_zero() {
                row.insert(j, c[i].clone());
            }
        }
        if !b[i].is_zero() {
            row.insert(n, b[i].clone());
        }
        e.insert(&row, f)?;
    }
    if e.rows.contains_key(&n) {
        return Ok(None);
    }
    let mut x = vec![Expr::zero(); n];
    for (p, r) in &e.rows {
        if let Some(v) = r.get(&n) {
            x[*p] = v.clone();
        }
    }
    Ok(Some(x))
}

/// Clear denominators of a vector and divide by the content, giving a primitive
/// polynomial vector spanning the same line.
pub fn primitive_vector(v: &[Expr], f: &Field) -> Result<Vec<Expr>, SymError> {
    use crate::symkernel::{gcd, lcm, Poly};
    let mut l = Poly::one();
    for x in v {
        if !x.is_zero() {
            l = lcm(&l, x.den());
        }
    }
    let le = Expr::from_poly(l);
    let scaled: Vec<Expr> = v.iter().map(|x| f.norm(&x.mul(&le))).collect::<Result<_, _>>()?;
    let mut g = Poly::zero();
    for x in &scaled {
        if !x.is_zero() && x.is_poly() {
            g = gcd(&g, x.num());
        }
    }
    let lead = scaled.iter().find(|x| !x.is_zero());
    let mut k = Expr::from_poly(g);
    if k.is_zero() {
        return Ok(scaled);
    }
    // fix the scalar so the first nonzero entry has leading coefficient 1
    if let Some(first) = lead {
        let q = first.div(&k)?;
        let lc = q.num().lc();
        k = k.scale(&lc);
    }
    let mut out: Vec<Expr> = scaled.iter().map(|x| f.div(x, &k)).collect::<Result<_, _>>()?;
    // a common factor `a` hidden by a rule a^2 -> R: e = e0 + e1 a is divisible by a when R | e0.
    // A constant R makes `a` a unit, so there is nothing to strip.
    loop {
        let mut changed = false;
        for r in f.rules.rules() {
            if r.power != 2 || !r.rhs.is_poly() || r.rhs.is_const() || r.rhs.contains_atom(&r.lhs) {
                continue;
            }
            if let Some(d) = divide_by_root(&out, &r.lhs, r.rhs.num()) {
                out = d.iter().map(|x| f.norm(x)).collect::<Result<_, _>>()?;
                changed = true;
            }
        }
        if !changed {
            return Ok(out);
        }
    }
}

fn divide_by_root(v: &[Expr], a: &crate::symkernel::Atom, square: &crate::symkernel::Poly) -> Option<Vec<Expr>> {
    use crate::symkernel::Poly;
    if v.iter().all(|x| x.is_zero()) {
        return None;
    }
    let mut out = Vec::new();
    for x in v {
        if !x.is_poly() {
            return None;
        }
        let c = x.num().coeffs_in(a);
        if c.keys().any(|k| *k > 1) {
            return None;
        }
        let e0 = c.get(&0).cloned().unwrap_or_else(Poly::zero);
        let e1 = c.get(&1).cloned().unwrap_or_else(Poly::zero);
        let q = if e0.is_zero() { Poly::zero() } else { e0.div_exact(square)? };
        out.push(Expr::from_poly(e1.add(&q.mul(&Poly::atom(a.clone())))));
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::ex;

    #[test]
    fn rank_of_cross_product_matrix() {
        let rows = vec![
            vec![ex("0"), ex("-x3"), ex("x2")],
            vec![ex("x3"), ex("0"), ex("-x1")],
            vec![ex("-x2"), ex("x1"), ex("0")],
        ];
        let f = Field::default();
        assert_eq!(rank(&rows, &f).unwrap(), 2);
        let ns = null_space(&rows, 3, &f).unwrap();
        assert_eq!(ns.len(), 1);
        let p = primitive_vector(&ns[0], &f).unwrap();
        assert_eq!(p, vec![ex("x1"), ex("x2"), ex("x3")]);
    }

    #[test]
    fn solve_consistent_and_not() {
        let f = Field::default();
        let cols = vec![vec![ex("1"), ex("x")], vec![ex("0"), ex("1")]];
        let x = solve_columns(&cols, &[ex("2"), ex("2*x + 3")], &f).unwrap().unwrap();
        assert_eq!(x, vec![ex("2"), ex("3")]);
        let cols = vec![vec![ex("1"), ex("x")]];
        assert!(solve_columns(&cols, &[ex("1"), ex("1")], &f).unwrap().is_none());
    }
}
