//! Exact symbolic kernel: canonical rational expressions over symbols and opaque
//! function applications, parsing, differentiation, substitution, rewrite rules
//! and numeric evaluation.

mod atom;
mod expr;
mod ops;
mod parse;
mod poly;
pub mod print;
mod rules;
mod table;

pub use atom::{App, Atom, AtomData};
pub use expr::{eval_poly_with, Expr};
pub use ops::{derive_with, diff, eval_numeric, substitute, substitute_atoms, NumericFns};
pub use parse::{parse, parse_tree, Tree};
pub use poly::{content_in, gcd, lcm, q_int, Mono, Poly, Q};
pub use rules::{reduce_mod, RewriteRule, RuleSet};
pub use table::{FunctionInfo, SymbolInfo, SymbolKind, SymbolTable};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SymError {
    #[error("syntax error at byte {pos}: expected {}, found {found}", expected.join(" or "))]
    Syntax { pos: usize, expected: Vec<String>, found: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("function `{name}` expects {expected} arguments, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("division by an expression that is identically zero")]
    DivisionByZero,
    #[error("cyclic substitution through `{0}`")]
    CyclicSubstitution(String),
    #[error("rewrite rule for `{0}` does not terminate: {1}")]
    NonTerminatingRule(String, String),
    #[error("unbound symbol `{0}` in numeric evaluation")]
    UnboundSymbol(String),
    #[error("no numeric rule for function `{0}`")]
    UnboundFunction(String),
    #[error("numeric domain error: {0}")]
    NumericDomain(String),
    #[error("non-integer or unsupported exponent: {0}")]
    BadExponent(String),
}

/// Parse and canonicalize in one step, for tests and small tools: every identifier
/// is accepted as a symbol and every call as an opaque function.
pub fn ex(text: &str) -> Expr {
    parse(text, &SymbolTable::permissive()).unwrap_or_else(|e| panic!("{text}: {e}"))
}
