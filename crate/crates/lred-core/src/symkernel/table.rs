use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Base,
    Fiber,
    Jet,
    ReducedFiber,
    ReducedJet,
    Parameter,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolInfo {
    pub name: String,
    pub kind: SymbolKind,
    /// For jet symbols: the underlying fiber symbol and the sorted multi-index of base symbols.
    pub jet: Option<(String, Vec<String>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionInfo {
    pub name: String,
    pub arity: usize,
    /// Declared argument names; enables the bare `f` and `f_r` shorthands.
    pub arg_names: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    symbols: BTreeMap<String, SymbolInfo>,
    functions: BTreeMap<String, FunctionInfo>,
    permissive: bool,
}

impl SymbolTable {
    pub fn new() -> SymbolTable {
        SymbolTable::default()
    }

    /// Unknown identifiers become parameters and unknown calls opaque functions.
    pub fn permissive() -> SymbolTable {
        SymbolTable { permissive: true, ..SymbolTable::default() }
    }

    pub fn is_permissive(&self) -> bool {
        self.permissive
    }

    /// Declare a symbol; returns false if the name is taken with a different kind.
    pub fn declare(&mut self, name: &str, kind: SymbolKind) -> bool {
        self.declare_info(SymbolInfo { name: name.to_string(), kind, jet: None })
    }

    pub fn declare_info(&mut self, info: SymbolInfo) -> bool {
        if self.functions.contains_key(&info.name) {
            return false;
        }
        match self.symbols.get(&info.name) {
            Some(old) => old.kind == info.kind && old.jet == info.jet,
            None => {
                self.symbols.insert(info.name.clone(), info);
                true
            }
        }
    }

    pub fn declare_function(&mut self, name: &str, arg_names: &[&str]) -> bool {
        self.declare_function_info(FunctionInfo {
            name: name.to_string(),
            arity: arg_names.len(),
            arg_names: arg_names.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn declare_function_info(&mut self, f: FunctionInfo) -> bool {
        if self.symbols.contains_key(&f.name) {
            return false;
        }
        match self.functions.get(&f.name) {
            Some(old) => *old == f,
            None => {
                self.functions.insert(f.name.clone(), f);
                true
            }
        }
    }

    pub fn symbol(&self, name: &str) -> Option<&SymbolInfo> {
        self.symbols.get(name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionInfo> {
        self.functions.get(name)
    }

    pub fn kind(&self, name: &str) -> Option<SymbolKind> {
        self.symbols.get(name).map(|s| s.kind)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &SymbolInfo> {
        self.symbols.values()
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionInfo> {
        self.functions.values()
    }

    /// Split `f_suffix` into a declared function and a derivative multi-index of slots.
    pub fn split_shorthand(&self, ident: &str) -> Option<(&FunctionInfo, Vec<u32>)> {
        let (head, suffix) = ident.split_once('_')?;
        let f = self.functions.get(head)?;
        if suffix.is_empty() || f.arg_names.is_empty() {
            return None;
        }
        let slot = |n: &str| f.arg_names.iter().position(|a| a == n).map(|i| i as u32);
        if suffix.contains('_') {
            let slots: Option<Vec<u32>> = suffix.split('_').map(slot).collect();
            return slots.map(|s| (f, s));
        }
        // segment the suffix into argument names, preferring longer names
        let mut names: Vec<&String> = f.arg_names.iter().collect();
        names.sort_by_key(|n| std::cmp::Reverse(n.len()));
        let mut out = Vec::new();
        let mut rest = suffix;
        while !rest.is_empty() {
            let n = names.iter().find(|n| rest.starts_with(n.as_str()))?;
            out.push(slot(n)?);
            rest = &rest[n.len()..];
        }
        Some((f, out))
    }
}
