//! Atoms are the indeterminates of the canonical polynomial representation:
//! plain symbols and applications of opaque functions (possibly differentiated).

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::expr::Expr;

#[derive(Clone)]
pub struct Atom(Arc<AtomData>);

#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomData {
    Sym(String),
    App(App),
}

/// `func` differentiated once per entry of `deriv` (argument slots, sorted), evaluated at `args`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct App {
    pub func: String,
    pub deriv: Vec<u32>,
    pub args: Vec<Expr>,
}

impl Atom {
    pub fn sym(name: &str) -> Atom {
        Atom(Arc::new(AtomData::Sym(name.to_string())))
    }

    pub fn app(func: &str, mut deriv: Vec<u32>, args: Vec<Expr>) -> Atom {
        deriv.sort_unstable();
        Atom(Arc::new(AtomData::App(App { func: func.to_string(), deriv, args })))
    }

    pub fn data(&self) -> &AtomData {
        &self.0
    }

    pub fn as_sym(&self) -> Option<&str> {
        match &*self.0 {
            AtomData::Sym(s) => Some(s),
            AtomData::App(_) => None,
        }
    }

    pub fn as_app(&self) -> Option<&App> {
        match &*self.0 {
            AtomData::App(a) => Some(a),
            AtomData::Sym(_) => None,
        }
    }

    pub fn is_sym(&self, name: &str) -> bool {
        self.as_sym() == Some(name)
    }

    /// The same application differentiated once more in slot `k`.
    pub fn derivative_in_slot(&self, k: u32) -> Option<Atom> {
        let a = self.as_app()?;
        let mut d = a.deriv.clone();
        d.push(k);
        Some(Atom::app(&a.func, d, a.args.clone()))
    }

    /// Does this atom mention `name`, either as itself or inside application arguments?
    pub fn mentions(&self, name: &str) -> bool {
        match &*self.0 {
            AtomData::Sym(s) => s == name,
            AtomData::App(a) => a.args.iter().any(|e| e.mentions(name)),
        }
    }

    /// Name of the symbol, or of the opaque function for applications.
    pub fn head(&self) -> &str {
        match &*self.0 {
            AtomData::Sym(s) => s,
            AtomData::App(a) => &a.func,
        }
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}
impl Eq for Atom {}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            Ordering::Equal
        } else {
            self.0.cmp(&other.0)
        }
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            AtomData::Sym(s) => write!(f, "{s}"),
            AtomData::App(a) => {
                if a.deriv.is_empty() {
                    write!(f, "{}(", a.func)?;
                } else {
                    let idx: Vec<String> = a.deriv.iter().map(|k| k.to_string()).collect();
                    write!(f, "D({}, {})(", a.func, idx.join(", "))?;
                }
                for (i, e) in a.args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
        }
    }
}
