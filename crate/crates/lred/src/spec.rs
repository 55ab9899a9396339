//! Problem files: the JSON schema, loading with diagnostics, and compilation into a
//! `Problem`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use lred_core::fields::{BundleSpec, Chart, FieldError, JetContext, LieAlgebra, VectorField};
use lred_core::numcheck::{NumericEnv, TreeFunction};
use lred_core::problem::{DiscreteMap, FrameKind, Hints, OperatorSpec, Options, Problem};
use lred_core::symkernel::{parse, parse_tree, Expr, RewriteRule, SymError, SymbolKind, SymbolTable};

pub const PROBLEM_SCHEMA: &str = "lred-problem/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub base: Vec<String>,
    pub fiber: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parameters: Vec<String>,
    /// opaque functions with their argument names
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "ChartFile::is_empty")]
    pub chart: ChartFile,
    pub generators: Vec<FieldFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub discrete: Vec<DiscreteFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorFile>,
    #[serde(default, skip_serializing_if = "HintsFile::is_empty")]
    pub hints: HintsFile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual_candidates: Vec<FieldFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universal_generators: Option<Vec<FieldFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "NumericFile::is_empty")]
    pub numeric: NumericFile,
    #[serde(default, skip_serializing_if = "OptionsFile::is_empty")]
    pub options: OptionsFile,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartFile {
    /// positive roots: `name = sqrt(square)`
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dependents: Vec<DependentFile>,
    /// identity rules, safe before differentiation
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<RuleFile>,
    /// submanifold rules, applied to results only
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<RuleFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positive: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub boxes: BTreeMap<String, [f64; 2]>,
}

impl ChartFile {
    fn is_empty(&self) -> bool {
        *self == ChartFile::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependentFile {
    pub name: String,
    pub square: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleFile {
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub name: String,
    pub components: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteFile {
    pub name: String,
    pub image: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindFile {
    Scalar,
    Vector,
    Covector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameFile {
    pub name: String,
    pub kind: KindFile,
    /// the coordinate of a vector or covector frame element
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub of: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub order: usize,
    pub frame: Vec<FrameFile>,
    pub components: BTreeMap<String, String>,
    /// generator -> frame element -> its Lie derivative, overriding the kind
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub actions: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedExpr {
    pub name: String,
    pub expr: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HintsFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fiber_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub base_invariants: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fiber_invariants: Vec<NamedExpr>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reduced_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub denominators: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub cross_section: BTreeMap<String, String>,
}

impl HintsFile {
    fn is_empty(&self) -> bool {
        *self == HintsFile::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericFunction {
    pub args: Vec<String>,
    pub body: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericFile {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, NumericFunction>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
}

impl NumericFile {
    fn is_empty(&self) -> bool {
        *self == NumericFile::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_num: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_fd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_time: Option<f64>,
}

impl OptionsFile {
    fn is_empty(&self) -> bool {
        *self == OptionsFile::default()
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: schema error: {message}")]
    Schema { path: String, line: usize, column: usize, message: String },
    #[error("{path}:{line}: syntax error in {location}: {message}")]
    Syntax { path: String, line: usize, location: String, message: String },
    #[error("{path}: admissibility error: {message}")]
    Admissibility { path: String, message: String },
}

/// A validated problem with its source text and the compiled form.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub path: PathBuf,
    pub file: ProblemFile,
    pub problem: Problem,
    /// sha256 of the raw file bytes
    pub input_hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load(path: &Path) -> Result<LoadedProblem, LoadError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: p.clone(), source })?;
    load_str(&text, &p).map(|(file, problem)| LoadedProblem {
        path: path.to_path_buf(),
        file,
        problem,
        input_hash: sha256_hex(text.as_bytes()),
    })
}

pub fn load_str(text: &str, path: &str) -> Result<(ProblemFile, Problem), LoadError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| LoadError::Schema {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let problem = compile(&file, text, path)?;
    Ok((file, problem))
}

pub fn save(file: &ProblemFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("problem files serialize");
    s.push('\n');
    s
}

/// Line of the first occurrence of a JSON string literal in the source.
fn line_of(text: &str, needle: &str) -> usize {
    let quoted = serde_json::to_string(needle).expect("string");
    match text.find(&quoted) {
        Some(i) => text[..i].matches('\n').count() + 1,
        None => 0,
    }
}

struct Compiler<'a> {
    text: &'a str,
    path: &'a str,
}

impl Compiler<'_> {
    fn schema(&self, needle: &str, message: String) -> LoadError {
        LoadError::Schema { path: self.path.to_string(), line: line_of(self.text, needle), column: 0, message }
    }

    fn expr(&self, src: &str, table: &SymbolTable, location: &str) -> Result<Expr, LoadError> {
        parse(src, table).map_err(|e| self.syntax(src, location, e))
    }

    fn syntax(&self, src: &str, location: &str, e: SymError) -> LoadError {
        LoadError::Syntax {
            path: self.path.to_string(),
            line: line_of(self.text, src),
            location: location.to_string(),
            message: e.to_string(),
        }
    }

    fn admissibility(&self, e: FieldError) -> LoadError {
        LoadError::Admissibility { path: self.path.to_string(), message: e.to_string() }
    }

    fn field(&self, f: &FieldFile, table: &SymbolTable, what: &str) -> Result<VectorField, LoadError> {
        let mut coeffs = BTreeMap::new();
        for (c, v) in &f.components {
            if table.kind(c).is_none() {
                return Err(self.schema(c, format!("{what} {}: `{c}` is not a declared coordinate", f.name)));
            }
            coeffs.insert(c.clone(), self.expr(v, table, &format!("{what} {}.{c}", f.name))?);
        }
        Ok(VectorField::new(&f.name, coeffs))
    }
}

fn declare(table: &mut SymbolTable, name: &str, kind: SymbolKind) -> Result<(), String> {
    if table.declare(name, kind) {
        Ok(())
    } else {
        Err(format!("`{name}` is declared twice"))
    }
}

fn compile(file: &ProblemFile, text: &str, path: &str) -> Result<Problem, LoadError> {
    let c = Compiler { text, path };
    if file.schema != PROBLEM_SCHEMA {
        return Err(c.schema(&file.schema, format!("unsupported schema `{}`, expected `{PROBLEM_SCHEMA}`", file.schema)));
    }
    if file.base.is_empty() {
        return Err(c.schema("base", "at least one base coordinate is required".into()));
    }
    let mut table = SymbolTable::new();
    let decl = |t: &mut SymbolTable, n: &str, k: SymbolKind| declare(t, n, k).map_err(|m| c.schema(n, m));
    for s in &file.base {
        decl(&mut table, s, SymbolKind::Base)?;
    }
    for s in &file.fiber {
        decl(&mut table, s, SymbolKind::Fiber)?;
    }
    for s in &file.parameters {
        decl(&mut table, s, SymbolKind::Parameter)?;
    }
    for d in &file.chart.dependents {
        decl(&mut table, &d.name, SymbolKind::Parameter)?;
    }
    for (f, args) in &file.functions {
        let a: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        if !table.declare_function(f, &a) {
            return Err(c.schema(f, format!("function `{f}` clashes with a symbol")));
        }
    }

    let mut chart = Chart::default();
    for d in &file.chart.dependents {
        let sq = c.expr(&d.square, &table, &format!("chart.dependents.{}", d.name))?;
        chart.add_dependent(&d.name, sq).map_err(|e| c.syntax(&d.square, "chart.dependents", e))?;
    }
    for (k, rules) in [("rules", &file.chart.rules), ("constraints", &file.chart.constraints)] {
        for r in rules {
            let loc = format!("chart.{k}");
            let lhs = c.expr(&r.lhs, &table, &loc)?;
            let rhs = c.expr(&r.rhs, &table, &loc)?;
            let rule = RewriteRule::from_expr_pair(&lhs, rhs).map_err(|e| c.syntax(&r.lhs, &loc, e))?;
            let set = if k == "rules" { &mut chart.identity_rules } else { &mut chart.constraint_rules };
            set.push(rule).map_err(|e| c.syntax(&r.lhs, &loc, e))?;
        }
    }
    for s in &file.chart.positive {
        if table.kind(s).is_none() {
            return Err(c.schema(s, format!("positive symbol `{s}` is not declared")));
        }
        if !chart.positive.contains(s) {
            chart.positive.push(s.clone());
        }
    }
    for (s, [lo, hi]) in &file.chart.boxes {
        if !(lo < hi) {
            return Err(c.schema(s, format!("sampling box for `{s}` is empty")));
        }
        chart.boxes.insert(s.clone(), (*lo, *hi));
    }

    let order = file.operator.as_ref().map(|o| o.order).unwrap_or(0);
    let jc = JetContext::new(&file.base, &file.fiber, order);
    jc.declare(&mut table);
    let bundle = BundleSpec { base: file.base.clone(), fiber: file.fiber.clone(), chart, table: table.clone() };

    let mut gens = Vec::new();
    for g in &file.generators {
        gens.push(c.field(g, &table, "generator")?);
    }
    let algebra = LieAlgebra::new(gens, &bundle).map_err(|e| c.admissibility(e))?;

    let mut discrete = Vec::new();
    for d in &file.discrete {
        let mut image = BTreeMap::new();
        for (u, v) in &d.image {
            if !file.fiber.contains(u) {
                return Err(c.schema(u, format!("discrete map {}: `{u}` is not a fiber coordinate", d.name)));
            }
            image.insert(u.clone(), c.expr(v, &table, &format!("discrete {}.{u}", d.name))?);
        }
        discrete.push(DiscreteMap { name: d.name.clone(), image });
    }

    let operator = match &file.operator {
        None => None,
        Some(o) => Some(compile_operator(&c, o, &table, &file.fiber, &file.base, &algebra)?),
    };

    // hints: kinematic fiber names are visible to fiber-invariant hints
    let mut htable = table.clone();
    for v in &file.hints.fiber_names {
        if htable.kind(v).is_none() {
            htable.declare(v, SymbolKind::ReducedFiber);
        }
    }
    let mut hints = Hints { fiber_names: file.hints.fiber_names.clone(), reduced_names: file.hints.reduced_names.clone(), ..Hints::default() };
    for h in &file.hints.base_invariants {
        hints.base_invariants.push(c.expr(h, &htable, "hints.base_invariants")?);
    }
    for h in &file.hints.fiber_invariants {
        hints.fiber_invariants.push((h.name.clone(), c.expr(&h.expr, &htable, &format!("hints.fiber_invariants.{}", h.name))?));
    }
    for h in &file.hints.denominators {
        hints.denominators.push(c.expr(h, &htable, "hints.denominators")?);
    }
    for (k, v) in &file.hints.cross_section {
        hints.cross_section.insert(k.clone(), c.expr(v, &htable, &format!("hints.cross_section.{k}"))?);
    }

    let mut candidates = Vec::new();
    for f in &file.residual_candidates {
        candidates.push(c.field(f, &table, "residual candidate")?);
    }
    let universal_generators = match &file.universal_generators {
        None => None,
        Some(fs) => Some(fs.iter().map(|f| c.field(f, &table, "universal generator")).collect::<Result<Vec<_>, _>>()?),
    };

    // closed forms live on the reduced base: declared symbols plus invariant names
    let solution = match &file.solution {
        None => None,
        Some(s) => {
            let mut stable = htable.clone();
            for h in &file.hints.reduced_names {
                if stable.kind(h).is_none() && stable.function(h).is_none() {
                    stable.declare(h, SymbolKind::ReducedFiber);
                }
            }
            let mut out = BTreeMap::new();
            for (k, v) in s {
                out.insert(k.clone(), c.expr(v, &SolutionTable(&stable).table(v), &format!("solution.{k}"))?);
            }
            Some(out)
        }
    };

    let mut opts = Options::default();
    let o = &file.options;
    opts.max_degree = o.max_degree.unwrap_or(opts.max_degree);
    opts.seed = o.seed.unwrap_or(opts.seed);
    opts.tol_num = o.tol_num.unwrap_or(opts.tol_num);
    opts.tol_fd = o.tol_fd.unwrap_or(opts.tol_fd);
    opts.samples = o.samples.unwrap_or(opts.samples);
    opts.flow_time = o.flow_time.unwrap_or(opts.flow_time);

    let mut defs = BTreeMap::new();
    for (name, f) in &file.numeric.functions {
        let body = parse_tree(&f.body).map_err(|e| c.syntax(&f.body, &format!("numeric.functions.{name}"), e))?;
        let mut ids = Vec::new();
        body.identifiers(&mut ids);
        for id in ids {
            if !f.args.contains(&id) && !file.numeric.parameters.contains_key(&id) && !file.parameters.contains(&id) {
                return Err(c.syntax(
                    &f.body,
                    &format!("numeric.functions.{name}"),
                    SymError::UnknownSymbol(id),
                ));
            }
        }
        defs.insert(name.clone(), TreeFunction { args: f.args.clone(), body });
    }
    let numeric = NumericEnv::new(defs, file.numeric.parameters.clone(), opts.seed);

    Ok(Problem {
        name: file.name.clone(),
        bundle,
        algebra,
        discrete,
        operator,
        hints,
        options: opts,
        universal_generators,
        candidates,
        solution,
        numeric,
    })
}

/// Closed forms may mention reduced base names not known at load time (computed
/// invariant names), so identifiers missing from the table become parameters.
struct SolutionTable<'a>(&'a SymbolTable);

impl SolutionTable<'_> {
    fn table(&self, src: &str) -> SymbolTable {
        let mut t = self.0.clone();
        if let Ok(tree) = parse_tree(src) {
            let mut ids = Vec::new();
            tree.identifiers(&mut ids);
            for id in ids {
                if t.kind(&id).is_none() && t.function(&id).is_none() && t.split_shorthand(&id).is_none() {
                    t.declare(&id, SymbolKind::Parameter);
                }
            }
        }
        t
    }
}

fn compile_operator(
    c: &Compiler,
    o: &OperatorFile,
    table: &SymbolTable,
    fiber: &[String],
    base: &[String],
    algebra: &LieAlgebra,
) -> Result<OperatorSpec, LoadError> {
    let mut kinds = BTreeMap::new();
    let mut frame = Vec::new();
    let mut ftable = table.clone();
    for f in &o.frame {
        let kind = match (&f.kind, &f.of) {
            (KindFile::Scalar, None) => FrameKind::Scalar,
            (KindFile::Vector, Some(u)) if fiber.contains(u) => FrameKind::Vector(u.clone()),
            (KindFile::Covector, Some(x)) if base.contains(x) || fiber.contains(x) => FrameKind::Covector(x.clone()),
            _ => return Err(c.schema(&f.name, format!("frame element {}: kind and `of` do not match", f.name))),
        };
        if !ftable.declare(&f.name, SymbolKind::Constant) {
            return Err(c.schema(&f.name, format!("frame element `{}` clashes with a symbol", f.name)));
        }
        frame.push(f.name.clone());
        kinds.insert(f.name.clone(), kind);
    }
    let mut components = BTreeMap::new();
    for (k, v) in &o.components {
        if !frame.contains(k) {
            return Err(c.schema(k, format!("component for unknown frame element `{k}`")));
        }
        components.insert(k.clone(), c.expr(v, table, &format!("operator.components.{k}"))?);
    }
    let mut actions = BTreeMap::new();
    for (g, m) in &o.actions {
        if !algebra.generators.iter().any(|x| &x.name == g) {
            return Err(c.schema(g, format!("action for unknown generator `{g}`")));
        }
        let mut row = BTreeMap::new();
        for (k, v) in m {
            if !frame.contains(k) {
                return Err(c.schema(k, format!("action on unknown frame element `{k}`")));
            }
            row.insert(k.clone(), c.expr(v, &ftable, &format!("operator.actions.{g}.{k}"))?);
        }
        actions.insert(g.clone(), row);
    }
    let mut constraints = Vec::new();
    for k in &o.constraints {
        constraints.push(c.expr(k, &ftable, "operator.constraints")?);
    }
    Ok(OperatorSpec { order: o.order, frame, kinds, actions, components, constraints })
}

/// Residual candidates from a separate file: a JSON array of fields.
pub fn load_candidates(path: &Path, problem: &Problem) -> Result<Vec<VectorField>, LoadError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: p.clone(), source })?;
    let fields: Vec<FieldFile> = serde_json::from_str(&text).map_err(|e| LoadError::Schema {
        path: p.clone(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let c = Compiler { text: &text, path: &p };
    fields.iter().map(|f| c.field(f, &problem.bundle.table, "residual candidate")).collect()
}
