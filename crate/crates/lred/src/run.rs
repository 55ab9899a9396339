//! Command execution: pipeline stages to a report and an exit code.

use std::time::Instant;

use serde_json::{json, Map, Value};

use lred_core::checks;
use lred_core::dynamic::{self, verify_solution, Reduction};
use lred_core::fields::VectorField;
use lred_core::kinematic::{
    build_kinematic_bundle, compute_invariants, isotropy_constraints, transversality_report, KinematicDiagram, KinematicError,
};
use lred_core::residual::{classify, universal_check};

use crate::report::{self, sci};
use crate::spec::LoadedProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Check,
    Kinematic,
    Invariants,
    Reduce,
    Verify,
    Residual,
    Universal,
    All,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Kinematic => "kinematic",
            Command::Invariants => "invariants",
            Command::Reduce => "reduce",
            Command::Verify => "verify",
            Command::Residual => "residual",
            Command::Universal => "universal",
            Command::All => "all",
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FINDING: i32 = 2;

pub struct Outcome {
    pub report: Value,
    pub exit: i32,
    /// wall-clock seconds; kept out of the JSON report so it stays reproducible
    pub seconds: f64,
}

struct Builder {
    sections: Map<String, Value>,
    exit: i32,
}

impl Builder {
    fn put(&mut self, k: &str, v: Value) {
        self.sections.insert(k.to_string(), v);
    }

    fn error(&mut self, stage: &str, message: String) {
        self.put("error", json!({ "stage": stage, "message": message }));
        self.exit = EXIT_ERROR;
    }
}

pub fn run(cmd: Command, lp: &LoadedProblem, extra_candidates: &[VectorField]) -> Outcome {
    let start = Instant::now();
    let p = &lp.problem;
    let mut b = Builder { sections: Map::new(), exit: EXIT_OK };
    b.put("schema_version", json!(report::REPORT_SCHEMA));
    b.put("problem", json!(p.name));
    b.put("input_sha256", json!(lp.input_hash));
    b.put("command", json!(cmd.name()));
    b.put(
        "options",
        json!({
            "max_degree": p.options.max_degree,
            "seed": p.options.seed,
            "tol_num": sci(p.options.tol_num),
            "tol_fd": sci(p.options.tol_fd),
            "samples": p.options.samples,
        }),
    );
    stages(cmd, lp, extra_candidates, &mut b);
    Outcome { report: Value::Object(b.sections), exit: b.exit, seconds: start.elapsed().as_secs_f64() }
}

fn stages(cmd: Command, lp: &LoadedProblem, extra: &[VectorField], b: &mut Builder) {
    let p = &lp.problem;
    let seed = p.options.seed;
    b.put("algebra", report::algebra(&p.algebra));
    let t = match transversality_report(&p.algebra, &p.bundle, seed) {
        Ok(t) => t,
        Err(e) => return b.error("transversality", e.to_string()),
    };
    b.put("transversality", report::transversality(&t));
    if cmd == Command::Check {
        return;
    }
    let cs = match isotropy_constraints(&p.algebra, &p.bundle, &p.discrete) {
        Ok(c) => c,
        Err(e) => return b.error("isotropy", e.to_string()),
    };
    b.put("isotropy", report::isotropy(&cs));
    let kb = match build_kinematic_bundle(&p.algebra, &p.bundle, &cs, &p.hints, seed) {
        Ok(k) => k,
        Err(KinematicError::EmptyKinematic { certificate, constraints }) => {
            b.put(
                "finding",
                json!({
                    "kind": "EmptyKinematic",
                    "message": "the kinematic bundle is empty: there are no group invariant sections",
                    "certificate": report::list(&certificate),
                    "constraints": report::list(&constraints),
                }),
            );
            b.exit = EXIT_FINDING;
            return;
        }
        Err(e) => return b.error("kinematic", e.to_string()),
    };
    b.put("kinematic", report::kinematic(&kb));
    if cmd == Command::Kinematic {
        return;
    }
    if cmd == Command::Residual {
        let mut cands: Vec<VectorField> = p.candidates.clone();
        cands.extend(extra.iter().cloned());
        return residual(&cands, lp, &kb, b);
    }
    let inv = match compute_invariants(&kb, t.rank_base, &p.hints, p.options.max_degree) {
        Ok(i) => i,
        Err(e) => return b.error("invariants", e.to_string()),
    };
    b.put("invariants", report::invariants(&inv));
    let kin = KinematicDiagram { transversality: t, constraints: cs, bundle: kb, invariants: inv };
    let mut numeric = Map::new();
    match checks::invariant_drift(p, &kin) {
        Ok(d) => numeric.insert("invariant_drift".into(), json!(sci(d))),
        Err(e) => numeric.insert("invariant_drift".into(), json!(format!("unavailable: {e}"))),
    };
    if cmd == Command::Invariants || (cmd == Command::All && p.operator.is_none()) {
        if cmd == Command::All && !(p.candidates.is_empty() && extra.is_empty()) {
            let mut cands = p.candidates.clone();
            cands.extend(extra.iter().cloned());
            residual(&cands, lp, &kin.bundle, b);
        }
        b.put("numeric", Value::Object(numeric));
        return;
    }
    if cmd == Command::Universal {
        universal(lp, &kin, b);
        b.put("numeric", Value::Object(numeric));
        return;
    }
    let red = match dynamic::reduce(p, kin.clone()) {
        Ok(r) => r,
        Err(e) => {
            b.put("numeric", Value::Object(numeric));
            return b.error("reduce", e.to_string());
        }
    };
    put_reduction(&red, b);
    match checks::ansatz_fd(p, &red) {
        Ok(d) => numeric.insert("ansatz_fd".into(), json!(sci(d))),
        Err(e) => numeric.insert("ansatz_fd".into(), json!(format!("unavailable: {e}"))),
    };
    if cmd == Command::Verify || (cmd == Command::All && p.solution.is_some()) {
        verify(lp, &red, b, &mut numeric);
    }
    if cmd == Command::All {
        let mut cands = p.candidates.clone();
        cands.extend(extra.iter().cloned());
        if !cands.is_empty() {
            residual(&cands, lp, &kin.bundle, b);
        }
        universal(lp, &kin, b);
    }
    b.put("numeric", Value::Object(numeric));
}

fn put_reduction(red: &Reduction, b: &mut Builder) {
    b.put("ansatz", report::ansatz(&red.ansatz));
    b.put("frame", report::frame(&red.frame));
    b.put("reduced", report::reduced(&red.reduced));
}

fn verify(lp: &LoadedProblem, red: &Reduction, b: &mut Builder, numeric: &mut Map<String, Value>) {
    let p = &lp.problem;
    let (forms, op) = match (&p.solution, &p.operator) {
        (Some(f), Some(o)) => (f, o),
        _ => return b.error("verify", "the problem declares no closed-form solution".into()),
    };
    let closure = checks::numeric_closure(p, red, forms);
    match verify_solution(forms, red, op, Some(&closure)) {
        Ok(c) => {
            b.put("solution", report::solution(forms, &c));
            if !c.passed {
                b.error("verify", "the closed form does not solve the system".into());
            }
        }
        Err(e) => return b.error("verify", e.to_string()),
    }
    match checks::solution_residuals(p, red, &red.reduced.components, forms) {
        Ok((_, no)) => numeric.insert("solution_fd_residual".into(), json!(no.iter().map(|x| sci(*x)).collect::<Vec<_>>())),
        Err(e) => numeric.insert("solution_fd_residual".into(), json!(format!("unavailable: {e}"))),
    };
}

fn residual(cands: &[VectorField], lp: &LoadedProblem, kb: &lred_core::kinematic::KinematicBundle, b: &mut Builder) {
    let p = &lp.problem;
    let mut out = Vec::new();
    for y in p.algebra.generators.iter().chain(cands) {
        match classify(y, &p.bundle, kb) {
            Ok(m) => out.push(report::membership(&m)),
            Err(e) => return b.error("residual", format!("{}: {e}", y.name)),
        }
    }
    b.put("residual", Value::Array(out));
}

fn universal(lp: &LoadedProblem, kin: &KinematicDiagram, b: &mut Builder) {
    match universal_check(&lp.problem, kin) {
        Ok(u) => b.put("universal", report::universal(&u)),
        Err(e) => b.error("universal", e.to_string()),
    }
}

/// Byte-stable JSON text of a report.
pub fn to_json(r: &Value) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("reports serialize");
    s.push('\n');
    s
}
