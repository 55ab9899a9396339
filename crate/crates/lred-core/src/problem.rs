//! In-memory form of a reduction problem, independent of any file format.

use std::collections::BTreeMap;

use crate::fields::{BundleSpec, LieAlgebra, VectorField};
use crate::numcheck::NumericEnv;
use crate::symkernel::Expr;

/// A finite fiber-linear map given by the image of each fiber coordinate.
#[derive(Debug, Clone)]
pub struct DiscreteMap {
    pub name: String,
    pub image: BTreeMap<String, Expr>,
}

/// How the generators act on an abstract frame symbol when no explicit action is given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameKind {
    /// Invariant under every generator.
    Scalar,
    /// The coordinate vector field ∂/∂u.
    Vector(String),
    /// The coordinate differential du.
    Covector(String),
}

#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub order: usize,
    pub frame: Vec<String>,
    pub kinds: BTreeMap<String, FrameKind>,
    /// generator name -> frame symbol -> L_V f as a linear combination of frame symbols
    pub actions: BTreeMap<String, BTreeMap<String, Expr>>,
    /// frame symbol -> component over jet coordinates
    pub components: BTreeMap<String, Expr>,
    /// linear forms in the frame symbols that admissible frame combinations must annihilate
    pub constraints: Vec<Expr>,
}

#[derive(Debug, Clone, Default)]
pub struct Hints {
    /// names for the kinematic fiber coordinates
    pub fiber_names: Vec<String>,
    pub base_invariants: Vec<Expr>,
    /// named fiber invariants over base and kinematic fiber coordinates
    pub fiber_invariants: Vec<(String, Expr)>,
    /// names of the reduced unknowns, in fiber-invariant order
    pub reduced_names: Vec<String>,
    /// extra denominators tried in the fiber-invariant search
    pub denominators: Vec<Expr>,
    /// values for parametric base symbols used to display a reduced system
    pub cross_section: BTreeMap<String, Expr>,
}

#[derive(Debug, Clone)]
pub struct Options {
    pub max_degree: u32,
    pub seed: u64,
    pub tol_num: f64,
    pub tol_fd: f64,
    pub samples: usize,
    pub flow_time: f64,
}

impl Default for Options {
    fn default() -> Options {
        Options { max_degree: 4, seed: 42, tol_num: 1e-6, tol_fd: 1e-5, samples: 20, flow_time: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub bundle: BundleSpec,
    pub algebra: LieAlgebra,
    pub discrete: Vec<DiscreteMap>,
    pub operator: Option<OperatorSpec>,
    pub hints: Hints,
    pub options: Options,
    /// a larger algebra used by the universal-solution test
    pub universal_generators: Option<Vec<VectorField>>,
    pub candidates: Vec<VectorField>,
    /// closed forms for the reduced unknowns
    pub solution: Option<BTreeMap<String, Expr>>,
    pub numeric: NumericEnv,
}
