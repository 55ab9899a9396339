//! Residual symmetry on a kinematic bundle: membership in the isotropy span and in
//! the automorphism algebra, and detection of universal solutions.

use std::collections::BTreeMap;

use crate::dynamic::{invariant_frame, DynamicError, InvariantFrame};
use crate::fields::{lie_bracket, BundleSpec, VectorField};
use crate::kinematic::{find_point, restrict_field, KinematicBundle, KinematicDiagram, KinematicError};
use crate::linalg::{solve_columns, Echelon, Field, SparseRow};
use crate::problem::Problem;
use crate::symkernel::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    InIsotropy,
    InAutomorphismOnly,
    Outside,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::InIsotropy => "in_isotropy",
            Verdict::InAutomorphismOnly => "in_automorphism_only",
            Verdict::Outside => "outside",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpanFailure {
    /// the bracket (or field) that left the span
    pub field: String,
    /// coordinate at which the augmented column became a pivot
    pub component: String,
    pub point: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct MembershipCertificate {
    pub candidate: String,
    pub verdict: Verdict,
    pub tangent: bool,
    /// Y = sum c_a V_a on the kinematic bundle
    pub isotropy_coefficients: Option<Vec<Expr>>,
    /// [V_a, Y] = sum c_ab V_b, per generator
    pub bracket_coefficients: Vec<Vec<Expr>>,
    pub failure: Option<SpanFailure>,
}

fn columns(fields: &[VectorField], coords: &[String]) -> Vec<Vec<Expr>> {
    fields.iter().map(|g| coords.iter().map(|s| g.coeff(s)).collect()).collect()
}

fn in_span(
    fields: &[VectorField],
    y: &VectorField,
    kb: &KinematicBundle,
    f: &Field,
) -> Result<Result<Vec<Expr>, SpanFailure>, KinematicError> {
    let coords = kb.bundle.coords();
    let cols = columns(fields, &coords);
    let b: Vec<Expr> = coords.iter().map(|s| y.coeff(s)).collect();
    if let Some(c) = solve_columns(&cols, &b, f)? {
        return Ok(Ok(c));
    }
    let n = cols.len();
    let mut e = Echelon::new();
    let mut component = coords[0].clone();
    for (i, bi) in b.iter().enumerate() {
        let mut row = SparseRow::new();
        for (j, c) in cols.iter().enumerate() {
            if !c[i].is_zero() {
                row.insert(j, c[i].clone());
            }
        }
        if !bi.is_zero() {
            row.insert(n, bi.clone());
        }
        if e.insert(&row, f)? == Some(n) {
            component = coords[i].clone();
            break;
        }
    }
    let entries: Vec<&Expr> = y.coeffs.values().collect();
    let point = find_point(&kb.bundle, &entries, 7, |_| Ok(true))?.display();
    Ok(Err(SpanFailure { field: y.name.clone(), component, point }))
}

/// Restrict Y to the kinematic bundle; None when it is not tangent.
fn restrict_candidate(y: &VectorField, original: &BundleSpec, kb: &KinematicBundle) -> Result<Option<VectorField>, KinematicError> {
    match restrict_field(y, original, kb) {
        Ok(v) => Ok(Some(v)),
        Err(KinematicError::NotTangent { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn check_isotropy_member(
    y: &VectorField,
    original: &BundleSpec,
    kb: &KinematicBundle,
) -> Result<MembershipCertificate, KinematicError> {
    let mut cert = MembershipCertificate {
        candidate: y.name.clone(),
        verdict: Verdict::Outside,
        tangent: false,
        isotropy_coefficients: None,
        bracket_coefficients: Vec::new(),
        failure: None,
    };
    let yt = match restrict_candidate(y, original, kb)? {
        Some(v) => v,
        None => return Ok(cert),
    };
    cert.tangent = true;
    let f = kb.bundle.chart.field();
    match in_span(&kb.residual, &yt, kb, &f)? {
        Ok(c) => {
            cert.verdict = Verdict::InIsotropy;
            cert.isotropy_coefficients = Some(c);
        }
        Err(w) => cert.failure = Some(w),
    }
    Ok(cert)
}

pub fn check_automorphism_member(
    y: &VectorField,
    original: &BundleSpec,
    kb: &KinematicBundle,
) -> Result<MembershipCertificate, KinematicError> {
    let mut cert = MembershipCertificate {
        candidate: y.name.clone(),
        verdict: Verdict::Outside,
        tangent: false,
        isotropy_coefficients: None,
        bracket_coefficients: Vec::new(),
        failure: None,
    };
    let yt = match restrict_candidate(y, original, kb)? {
        Some(v) => v,
        None => return Ok(cert),
    };
    cert.tangent = true;
    let f = kb.bundle.chart.field();
    for v in &kb.residual {
        let br = lie_bracket(v, &yt, &kb.bundle.chart)?;
        match in_span(&kb.residual, &br, kb, &f)? {
            Ok(c) => cert.bracket_coefficients.push(c),
            Err(w) => {
                cert.failure = Some(w);
                return Ok(cert);
            }
        }
    }
    cert.verdict = Verdict::InAutomorphismOnly;
    Ok(cert)
}

/// Isotropy membership first, then the automorphism test.
pub fn classify(y: &VectorField, original: &BundleSpec, kb: &KinematicBundle) -> Result<MembershipCertificate, KinematicError> {
    let iso = check_isotropy_member(y, original, kb)?;
    if iso.verdict == Verdict::InIsotropy || !iso.tangent {
        return Ok(iso);
    }
    let mut aut = check_automorphism_member(y, original, kb)?;
    if aut.verdict == Verdict::Outside && aut.failure.is_none() {
        aut.failure = iso.failure;
    }
    Ok(aut)
}

#[derive(Debug, Clone)]
pub struct UniversalReport {
    pub universal: bool,
    pub frame: InvariantFrame,
    pub generators: Vec<String>,
}

/// Universal iff the invariant frame of the operator's target is empty under the
/// declared larger algebra (or the problem's own algebra).
pub fn universal_check(problem: &Problem, kin: &KinematicDiagram) -> Result<UniversalReport, DynamicError> {
    let op = problem.operator.as_ref().ok_or(DynamicError::NoOperator)?;
    let gens = problem.universal_generators.clone().unwrap_or_else(|| problem.algebra.generators.clone());
    let frame = invariant_frame(op, &gens, &kin.bundle, &problem.bundle, problem.options.max_degree)?;
    Ok(UniversalReport {
        universal: frame.dim() == 0,
        generators: gens.iter().map(|g| g.name.clone()).collect(),
        frame,
    })
}
