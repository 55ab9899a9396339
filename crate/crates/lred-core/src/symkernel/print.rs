//! Rendering canonical expressions back into the input grammar.

use num_traits::{One, Signed};

use super::atom::{Atom, AtomData};
use super::expr::{fmt_q, Expr};
use super::poly::{Mono, Poly, Q};
use super::table::SymbolTable;

/// Render `e`; with a table, applications at their declared arguments use the
/// `f` / `f_r` shorthands.
pub fn render(e: &Expr, ctx: Option<&SymbolTable>) -> String {
    let n = render_poly(e.num(), ctx);
    if e.den().is_one() {
        return n;
    }
    let d = render_poly(e.den(), ctx);
    let n = if e.num().len() > 1 { format!("({n})") } else { n };
    let d = if needs_parens_as_divisor(e.den()) { format!("({d})") } else { d };
    format!("{n}/{d}")
}

fn needs_parens_as_divisor(p: &Poly) -> bool {
    if p.len() != 1 {
        return true;
    }
    let (m, c) = &p.terms()[0];
    !(c.is_one() && m.0.len() == 1)
}

pub fn render_poly(p: &Poly, ctx: Option<&SymbolTable>) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut s = String::new();
    for (i, (m, c)) in p.terms().iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if i == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        s.push_str(&render_term(m, &a, ctx));
    }
    s
}

fn render_term(m: &Mono, c: &Q, ctx: Option<&SymbolTable>) -> String {
    let mut parts = Vec::new();
    if m.is_one() || !c.is_one() {
        parts.push(fmt_q(c));
    }
    for (a, e) in &m.0 {
        let base = render_atom(a, ctx);
        if *e == 1 {
            parts.push(base);
        } else {
            parts.push(format!("{base}^{e}"));
        }
    }
    parts.join("*")
}

pub fn render_atom(a: &Atom, ctx: Option<&SymbolTable>) -> String {
    match a.data() {
        AtomData::Sym(s) => s.clone(),
        AtomData::App(app) => {
            if let Some(t) = ctx {
                if let Some(f) = t.function(&app.func) {
                    let at_declared = f.arg_names.len() == app.args.len()
                        && f.arity > 0
                        && f.arg_names.iter().zip(&app.args).all(|(n, e)| e.as_sym() == Some(n.as_str()));
                    if at_declared {
                        if app.deriv.is_empty() {
                            return app.func.clone();
                        }
                        let names: Vec<&str> = app.deriv.iter().map(|k| f.arg_names[*k as usize].as_str()).collect();
                        let sep = if f.arg_names.iter().all(|n| n.len() == 1) { "" } else { "_" };
                        let short = format!("{}_{}", app.func, names.join(sep));
                        // only if it reads back unambiguously
                        if t.symbol(&short).is_none()
                            && t.split_shorthand(&short).map(|(g, i)| g.name == app.func && i == app.deriv).unwrap_or(false)
                        {
                            return short;
                        }
                    }
                }
            }
            let args: Vec<String> = app.args.iter().map(|e| render(e, ctx)).collect();
            if app.deriv.is_empty() {
                format!("{}({})", app.func, args.join(", "))
            } else {
                let idx: Vec<String> = app.deriv.iter().map(|k| k.to_string()).collect();
                format!("D({}, {})({})", app.func, idx.join(", "), args.join(", "))
            }
        }
    }
}
