//! Expression grammar: `+ - * / ^`, unary minus, integer literals (so `p/q` is a
//! quotient of literals), identifiers, calls `f(a, b)`, derivative atoms
//! `D(f, i, ...)` optionally followed by `(args)`, and the shorthands `f` / `f_r`
//! for functions with declared argument names. `^` binds tightest, is
//! right-associative, and takes integer exponents only.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::atom::Atom;
use super::expr::Expr;
use super::poly::Q;
use super::table::SymbolTable;
use super::SymError;

/// Uncanonicalized syntax tree, as written.
#[derive(Debug, Clone, PartialEq)]
pub enum Tree {
    Num(Q),
    Ident(String),
    Neg(Box<Tree>),
    Add(Vec<Tree>),
    Sub(Box<Tree>, Box<Tree>),
    Mul(Vec<Tree>),
    Div(Box<Tree>, Box<Tree>),
    Pow(Box<Tree>, i64),
    Call { func: String, args: Vec<Tree> },
    /// `D(f, i, ...)` with optional explicit arguments; slots are names or indices.
    Deriv { func: String, slots: Vec<String>, args: Option<Vec<Tree>> },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(text: &str) -> Result<Lexer, SymError> {
    let mut toks = Vec::new();
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let s = i;
            while i < b.len() && (b[i] as char).is_ascii_digit() {
                i += 1;
            }
            let n: BigInt = text[s..i].parse().expect("digits");
            toks.push((Tok::Int(n), s));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            toks.push((Tok::Ident(text[s..i].to_string()), s));
        } else if "+-*/^(),".contains(c) {
            toks.push((Tok::Sym(c), i));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or(c);
            return Err(SymError::Syntax {
                pos: i,
                expected: vec!["expression".into()],
                found: format!("`{ch}`"),
            });
        }
    }
    toks.push((Tok::End, text.len()));
    Ok(Lexer { toks })
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> usize {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err(&self, expected: &[&str]) -> SymError {
        let found = match self.peek() {
            Tok::Int(n) => format!("`{n}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        };
        SymError::Syntax { pos: self.pos(), expected: expected.iter().map(|s| s.to_string()).collect(), found }
    }

    fn expect(&mut self, c: char) -> Result<(), SymError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&[&format!("`{c}`")]))
        }
    }

    fn expr(&mut self) -> Result<Tree, SymError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    let r = self.term()?;
                    lhs = match lhs {
                        Tree::Add(mut v) => {
                            v.push(r);
                            Tree::Add(v)
                        }
                        l => Tree::Add(vec![l, r]),
                    };
                }
                Tok::Sym('-') => {
                    self.bump();
                    let r = self.term()?;
                    lhs = Tree::Sub(Box::new(lhs), Box::new(r));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Tree, SymError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    let r = self.unary()?;
                    lhs = match lhs {
                        Tree::Mul(mut v) => {
                            v.push(r);
                            Tree::Mul(v)
                        }
                        l => Tree::Mul(vec![l, r]),
                    };
                }
                Tok::Sym('/') => {
                    self.bump();
                    let r = self.unary()?;
                    lhs = Tree::Div(Box::new(lhs), Box::new(r));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Tree, SymError> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(Tree::Neg(Box::new(self.unary()?)));
        }
        if *self.peek() == Tok::Sym('+') {
            self.bump();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Tree, SymError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let e = self.exponent()?;
            return Ok(Tree::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    /// Integer exponent: literal, signed literal, parenthesized, or a right-associated tower.
    fn exponent(&mut self) -> Result<i64, SymError> {
        let pos = self.pos();
        let mut sign = 1i64;
        while *self.peek() == Tok::Sym('-') {
            self.bump();
            sign = -sign;
        }
        let base = match self.bump() {
            Tok::Int(n) => n.to_i64().ok_or_else(|| SymError::BadExponent(n.to_string()))?,
            Tok::Sym('(') => {
                let v = self.exponent()?;
                self.expect(')')?;
                v
            }
            _ => {
                self.i -= 1;
                return Err(SymError::Syntax {
                    pos,
                    expected: vec!["integer exponent".into()],
                    found: "non-integer exponent".into(),
                });
            }
        };
        let mut v = sign * base;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let e = self.exponent()?;
            if e < 0 || e > 64 {
                return Err(SymError::BadExponent(format!("{v}^{e}")));
            }
            v = v.checked_pow(e as u32).ok_or_else(|| SymError::BadExponent(format!("{v}^{e}")))?;
        }
        Ok(v)
    }

    fn args(&mut self) -> Result<Vec<Tree>, SymError> {
        self.expect('(')?;
        let mut out = Vec::new();
        if *self.peek() == Tok::Sym(')') {
            self.bump();
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            match self.peek() {
                Tok::Sym(',') => {
                    self.bump();
                }
                Tok::Sym(')') => {
                    self.bump();
                    return Ok(out);
                }
                _ => return Err(self.err(&["`,`", "`)`"])),
            }
        }
    }

    fn primary(&mut self) -> Result<Tree, SymError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Tree::Num(Q::from_integer(n)))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() != Tok::Sym('(') {
                    return Ok(Tree::Ident(name));
                }
                if name == "D" {
                    return self.deriv();
                }
                let args = self.args()?;
                Ok(Tree::Call { func: name, args })
            }
            _ => Err(self.err(&["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn deriv(&mut self) -> Result<Tree, SymError> {
        self.expect('(')?;
        let func = match self.bump() {
            Tok::Ident(s) => s,
            _ => {
                self.i -= 1;
                return Err(self.err(&["function name"]));
            }
        };
        let mut slots = Vec::new();
        while *self.peek() == Tok::Sym(',') {
            self.bump();
            match self.bump() {
                Tok::Ident(s) => slots.push(s),
                Tok::Int(n) => slots.push(n.to_string()),
                _ => {
                    self.i -= 1;
                    return Err(self.err(&["argument name or index"]));
                }
            }
        }
        self.expect(')')?;
        if slots.is_empty() {
            return Err(self.err(&["`,`"]));
        }
        let args = if *self.peek() == Tok::Sym('(') { Some(self.args()?) } else { None };
        Ok(Tree::Deriv { func, slots, args })
    }
}

pub fn parse_tree(text: &str) -> Result<Tree, SymError> {
    let lx = lex(text)?;
    let mut p = Parser { toks: lx.toks, i: 0 };
    let t = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.err(&["operator", "end of input"]));
    }
    Ok(t)
}

/// Parse and canonicalize against a symbol table.
pub fn parse(text: &str, ctx: &SymbolTable) -> Result<Expr, SymError> {
    let t = parse_tree(text)?;
    t.to_expr(ctx)
}

impl Tree {
    pub fn to_expr(&self, ctx: &SymbolTable) -> Result<Expr, SymError> {
        Ok(match self {
            Tree::Num(q) => Expr::constant(q.clone()),
            Tree::Ident(name) => resolve_ident(name, ctx)?,
            Tree::Neg(a) => a.to_expr(ctx)?.neg(),
            Tree::Add(v) => {
                let mut acc = Expr::zero();
                for t in v {
                    acc = acc.add(&t.to_expr(ctx)?);
                }
                acc
            }
            Tree::Sub(a, b) => a.to_expr(ctx)?.sub(&b.to_expr(ctx)?),
            Tree::Mul(v) => {
                let mut acc = Expr::one();
                for t in v {
                    acc = acc.mul(&t.to_expr(ctx)?);
                }
                acc
            }
            Tree::Div(a, b) => a.to_expr(ctx)?.div(&b.to_expr(ctx)?)?,
            Tree::Pow(a, e) => a.to_expr(ctx)?.pow(*e)?,
            Tree::Call { func, args } => {
                let args: Vec<Expr> = args.iter().map(|a| a.to_expr(ctx)).collect::<Result<_, _>>()?;
                check_function(func, args.len(), ctx)?;
                Expr::atom(Atom::app(func, Vec::new(), args))
            }
            Tree::Deriv { func, slots, args } => {
                let info = ctx.function(func).cloned();
                let arity = match (&info, args) {
                    (Some(f), _) => f.arity,
                    (None, Some(a)) if ctx.is_permissive() => a.len(),
                    _ => return Err(SymError::UnknownSymbol(func.clone())),
                };
                let mut idx = Vec::new();
                for s in slots {
                    let k = match s.parse::<u32>() {
                        Ok(k) => k,
                        Err(_) => info
                            .as_ref()
                            .and_then(|f| f.arg_names.iter().position(|a| a == s))
                            .map(|k| k as u32)
                            .ok_or_else(|| SymError::UnknownSymbol(format!("{func}: argument {s}")))?,
                    };
                    if k as usize >= arity {
                        return Err(SymError::Arity { name: func.clone(), expected: arity, got: k as usize + 1 });
                    }
                    idx.push(k);
                }
                let args: Vec<Expr> = match args {
                    Some(a) => a.iter().map(|t| t.to_expr(ctx)).collect::<Result<_, _>>()?,
                    None => {
                        let f = info.ok_or_else(|| SymError::UnknownSymbol(func.clone()))?;
                        if f.arg_names.len() != f.arity {
                            return Err(SymError::UnknownSymbol(func.clone()));
                        }
                        f.arg_names.iter().map(|n| resolve_ident(n, ctx)).collect::<Result<_, _>>()?
                    }
                };
                check_function(func, args.len(), ctx)?;
                Expr::atom(Atom::app(func, idx, args))
            }
        })
    }

    /// Every identifier appearing as a plain name.
    pub fn identifiers(&self, out: &mut Vec<String>) {
        match self {
            Tree::Num(_) => {}
            Tree::Ident(s) => out.push(s.clone()),
            Tree::Neg(a) | Tree::Pow(a, _) => a.identifiers(out),
            Tree::Add(v) | Tree::Mul(v) => v.iter().for_each(|t| t.identifiers(out)),
            Tree::Sub(a, b) | Tree::Div(a, b) => {
                a.identifiers(out);
                b.identifiers(out);
            }
            Tree::Call { args, .. } => args.iter().for_each(|t| t.identifiers(out)),
            Tree::Deriv { args, .. } => {
                if let Some(a) = args {
                    a.iter().for_each(|t| t.identifiers(out))
                }
            }
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Tree::Num(q) if q.is_zero())
    }
}

fn check_function(func: &str, n: usize, ctx: &SymbolTable) -> Result<(), SymError> {
    match ctx.function(func) {
        Some(f) if f.arity == n => Ok(()),
        Some(f) => Err(SymError::Arity { name: func.to_string(), expected: f.arity, got: n }),
        None if ctx.is_permissive() => Ok(()),
        None => Err(SymError::UnknownSymbol(func.to_string())),
    }
}

fn resolve_ident(name: &str, ctx: &SymbolTable) -> Result<Expr, SymError> {
    if ctx.symbol(name).is_some() {
        return Ok(Expr::sym(name));
    }
    if let Some(f) = ctx.function(name) {
        if f.arg_names.len() == f.arity && f.arity > 0 {
            let args = f.arg_names.iter().map(|n| resolve_ident(n, ctx)).collect::<Result<_, _>>()?;
            return Ok(Expr::atom(Atom::app(name, Vec::new(), args)));
        }
    }
    if let Some((f, idx)) = ctx.split_shorthand(name) {
        if f.arg_names.len() == f.arity {
            let args = f.arg_names.iter().map(|n| resolve_ident(n, ctx)).collect::<Result<_, _>>()?;
            return Ok(Expr::atom(Atom::app(&f.name, idx, args)));
        }
    }
    if ctx.is_permissive() {
        return Ok(Expr::sym(name));
    }
    Err(SymError::UnknownSymbol(name.to_string()))
}
