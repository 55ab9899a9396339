//! Numeric cross-checks of the symbolic pipeline artifacts.

use std::collections::{BTreeMap, BTreeSet};

use crate::dynamic::{lifted_section, Reduction};
use crate::fields::{Chart, JetContext};
use crate::kinematic::KinematicDiagram;
use crate::numcheck::{fd_crosscheck, flow_invariance, residual_scan, section_residual, ChartSampler, NumError, SamplePlan};
use crate::problem::Problem;
use crate::symkernel::Expr;

fn sample(
    chart: &Chart,
    exprs: &[&Expr],
    coords: &[String],
    problem: &Problem,
    salt: u64,
) -> Result<Vec<BTreeMap<String, f64>>, NumError> {
    let mut free: BTreeSet<String> = coords.iter().cloned().collect();
    for e in exprs {
        free.extend(e.free_symbols());
    }
    let fixed: BTreeMap<String, f64> = problem.numeric.params.clone();
    let dens: Vec<Expr> = exprs.iter().filter(|e| !e.den().is_const()).map(|e| Expr::from_poly(e.den().clone())).collect();
    let plan = SamplePlan::new(problem.options.seed ^ salt, problem.options.samples).with_boxes(&chart.boxes);
    let free: Vec<String> = free.into_iter().collect();
    ChartSampler::new(chart, &free, &fixed, dens, &plan, &problem.numeric).points(problem.options.samples)
}

/// Largest relative drift of every emitted invariant along the flows of the residual
/// generators on the kinematic bundle.
pub fn invariant_drift(problem: &Problem, kin: &KinematicDiagram) -> Result<f64, NumError> {
    let kb = &kin.bundle;
    let invs: Vec<&Expr> = kin.invariants.base.iter().chain(&kin.invariants.fiber).map(|i| &i.expr).collect();
    let mut coeffs: Vec<&Expr> = invs.clone();
    for g in &kb.residual {
        coeffs.extend(g.coeffs.values());
    }
    let pts = sample(&kb.bundle.chart, &coeffs, &kb.bundle.coords(), problem, 0x5eed)?;
    let mut worst: f64 = 0.0;
    for g in &kb.residual {
        for i in &invs {
            worst = worst.max(flow_invariance(i, g, &kb.bundle.chart, &pts, problem.options.flow_time, &problem.numeric)?);
        }
    }
    Ok(worst)
}

/// Largest relative disagreement between symbolic chart derivatives of the ansatz
/// section and centered differences, over every section entry and base coordinate.
pub fn ansatz_fd(problem: &Problem, red: &Reduction) -> Result<f64, NumError> {
    let a = &red.ansatz;
    let entries: Vec<&Expr> = a.section.values().collect();
    let pts = sample(&a.chart, &entries, &problem.bundle.base, problem, 0xfd)?;
    let mut worst: f64 = 0.0;
    for e in &entries {
        for x in &problem.bundle.base {
            if a.chart.constraint_rules.rules().iter().any(|r| r.lhs.is_sym(x)) {
                continue;
            }
            worst = worst.max(fd_crosscheck(e, x, &a.chart, &pts, &problem.numeric)?);
        }
    }
    Ok(worst)
}

/// Per-component maxima of the reduced system (evaluated directly) and of the original
/// operator on the lifted section (jets by finite differences).
pub fn solution_residuals(
    problem: &Problem,
    red: &Reduction,
    reduced: &[Expr],
    forms: &BTreeMap<String, Expr>,
) -> Result<(Vec<f64>, Vec<f64>), NumError> {
    let op = match &problem.operator {
        Some(op) => op,
        None => return Ok((Vec::new(), Vec::new())),
    };
    let a = &red.ansatz;
    let section = lifted_section(a, forms)?;
    let comps: Vec<Expr> = op.frame.iter().map(|s| op.components.get(s).cloned().unwrap_or_else(Expr::zero)).collect();
    let mut probe: Vec<&Expr> = section.values().collect();
    probe.extend(reduced.iter());
    let pts = sample(&a.chart, &probe, &problem.bundle.base, problem, 0x501)?;
    let nr = residual_scan(reduced, &pts, &problem.numeric)?;
    let jc = JetContext::new(&problem.bundle.base, &problem.bundle.fiber, op.order);
    let no = section_residual(&comps, &section, &jc, &a.chart, &pts, &problem.numeric)?;
    Ok((nr, no))
}

/// Numeric fallback handed to `verify_solution`.
pub fn numeric_closure<'a>(
    problem: &'a Problem,
    red: &'a Reduction,
    forms: &'a BTreeMap<String, Expr>,
) -> impl Fn(&[Expr], &BTreeMap<String, Expr>) -> Result<(Vec<f64>, Vec<f64>), String> + 'a {
    move |reduced: &[Expr], _section: &BTreeMap<String, Expr>| {
        solution_residuals(problem, red, reduced, forms).map_err(|e| e.to_string())
    }
}
