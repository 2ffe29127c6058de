//! `solve` and `project`: load, iterate, report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use ssn_core::gen::{instance_rng, random_vector};
use ssn_core::pwls::{check_conditions, newton_solve, ConditionReport};
use ssn_core::qp::{
    cone_projection, kkt_residual, qp_newton_solve, qp_objective, qp_to_pwls, recover_qp_solution,
    KktResidual, ProjectionOptions,
};
use ssn_core::{SolveReport, SolveStatus, SolverOptions};
use thiserror::Error;

use crate::args::{Formulation, IterationArgs, ProjectArgs, SolveArgs};
use crate::problem::{read_vector, Problem, ProblemError, ProblemFile};

pub const EXIT_MALFORMED: u8 = 1;

/// Process exit code for a finished solve.
pub fn exit_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Converged | SolveStatus::ConvergedExact => 0,
        SolveStatus::Cycled => 2,
        SolveStatus::MaxIterations => 3,
        SolveStatus::SingularJacobian => 4,
    }
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] ssn_core::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

/// Text for standard output plus the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: u8,
}

#[derive(Debug, Serialize)]
struct ConditionJson {
    inv_norm: f64,
    existence_ok: bool,
    rate_ok: bool,
    predicted_rate: Option<f64>,
}

impl From<ConditionReport> for ConditionJson {
    fn from(c: ConditionReport) -> Self {
        Self {
            inv_norm: c.inv_norm,
            existence_ok: c.existence_ok,
            rate_ok: c.rate_ok,
            predicted_rate: c.predicted_rate,
        }
    }
}

#[derive(Debug, Serialize)]
struct KktJson {
    primal_violation: f64,
    dual_violation: f64,
    complementarity: f64,
}

impl From<KktResidual> for KktJson {
    fn from(k: KktResidual) -> Self {
        Self {
            primal_violation: k.primal_violation,
            dual_violation: k.dual_violation,
            complementarity: k.complementarity,
        }
    }
}

#[derive(Debug, Serialize)]
struct SolveJson<'a> {
    kind: &'static str,
    formulation: &'static str,
    report: &'a SolveReport,
    condition: ConditionJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    qp_minimizer: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kkt: Option<KktJson>,
}

#[derive(Debug, Serialize)]
struct ProjectJson<'a> {
    v: &'a [f64],
    projection: &'a [f64],
    kkt: KktJson,
    report: &'a SolveReport,
}

fn json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn starting_point(spec: &str, n: usize, seed: u64) -> Result<Vec<f64>, CommandError> {
    let x0 = match spec {
        "zero" => vec![0.0; n],
        "random" => random_vector(n, 1.0, &mut instance_rng(seed, 0)),
        path => read_vector(Path::new(path))?,
    };
    if x0.len() != n {
        return Err(CommandError::Usage(format!(
            "starting point has length {}, problem dimension is {n}",
            x0.len()
        )));
    }
    Ok(x0)
}

fn solver_options(it: &IterationArgs, n: usize) -> Result<SolverOptions, CommandError> {
    let opts = match (&it.reference, it.tolx) {
        (Some(path), Some(tolx)) => {
            let u = read_vector(path)?;
            if u.len() != n {
                return Err(CommandError::Usage(format!(
                    "reference has length {}, problem dimension is {n}",
                    u.len()
                )));
            }
            SolverOptions::known_solution(u, tolx)
        }
        _ => SolverOptions::residual(it.tol_f),
    };
    Ok(opts.with_max_iter(it.max_iter).with_trace(it.trace))
}

fn write_report(path: Option<&Path>, body: &str) -> Result<(), CommandError> {
    if let Some(path) = path {
        fs::write(path, body).map_err(|source| CommandError::Write {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

fn describe(out: &mut String, report: &SolveReport, trace: bool) {
    let _ = writeln!(out, "status: {}", report.status);
    let _ = writeln!(out, "iterations: {}", report.iterations);
    let _ = writeln!(out, "residual_inf: {:e}", report.final_residual_norm);
    let _ = writeln!(out, "x: {}", json(&report.last_iterate));
    if let Some(c) = &report.cycle {
        let _ = writeln!(out, "cycle_start: {}", c.start);
        let _ = writeln!(out, "cycle_period: {}", c.period);
        let _ = writeln!(out, "cycle_points: {}", json(&c.points));
    }
    if trace {
        if let Some(t) = &report.iterate_trace {
            let _ = writeln!(out, "iterates: {}", json(t));
        }
        let _ = writeln!(out, "patterns: {}", json(&report.pattern_trace));
    }
}

fn describe_condition(out: &mut String, label: &str, c: &ConditionReport) {
    let _ = write!(
        out,
        "condition: {label}={} existence_ok={} rate_ok={}",
        c.inv_norm, c.existence_ok, c.rate_ok
    );
    if let Some(r) = c.predicted_rate {
        let _ = write!(out, " predicted_rate={r}");
    }
    out.push('\n');
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Outcome, CommandError> {
    let file = ProblemFile::read(&args.problem)?;
    let problem = file.validate()?;
    let n = problem.dim();
    let x0 = starting_point(&args.iter.x0, n, args.iter.seed)?;
    let opts = solver_options(&args.iter, n)?;

    let qp = match &problem {
        Problem::Pwls(_) => None,
        Problem::Qp(q) => Some(q.clone()),
        Problem::Cone(c) => Some(c.to_qp()?),
    };
    let formulation = match (args.formulation, &qp) {
        (Some(Formulation::Qp), None) => {
            return Err(CommandError::Usage(
                "a pwls problem has no qp form; use --formulation pwls".into(),
            ))
        }
        (Some(f), _) => f,
        (None, None) => Formulation::Pwls,
        (None, Some(_)) => Formulation::Qp,
    };

    let (report, condition, label) = match (&problem, &qp, formulation) {
        (Problem::Pwls(p), _, _) => (
            newton_solve(p, &x0, &opts)?,
            check_conditions(p),
            "inv_norm",
        ),
        (_, Some(q), Formulation::Qp) => {
            let c = ConditionReport::from_inv_norm(q.distance_to_identity()?);
            (qp_newton_solve(q, &x0, &opts)?, c, "q_minus_i_norm")
        }
        (_, Some(q), Formulation::Pwls) => {
            let p = qp_to_pwls(q)
                .map_err(|e| CommandError::Usage(format!("pwls form unavailable: {e}")))?;
            (
                newton_solve(&p, &x0, &opts)?,
                check_conditions(&p),
                "inv_norm",
            )
        }
        (_, None, _) => unreachable!("only pwls files lack a qp form"),
    };

    let mut out = String::new();
    let _ = writeln!(out, "problem: {} (n = {n})", problem.kind());
    let _ = writeln!(
        out,
        "formulation: {}",
        if formulation == Formulation::Qp {
            "qp"
        } else {
            "pwls"
        }
    );
    describe(&mut out, &report, args.iter.trace);
    describe_condition(&mut out, label, &condition);

    let mut extra = (None, None, None);
    if let Some(q) = &qp {
        let v = recover_qp_solution(&report.last_iterate);
        let obj = qp_objective(q, &v)?;
        let kkt = kkt_residual(q, &v)?;
        let _ = writeln!(out, "qp_minimizer: {}", json(&v));
        let _ = writeln!(out, "objective: {obj}");
        let _ = writeln!(out, "kkt_max: {:e}", kkt.max());
        extra = (Some(v), Some(obj), Some(kkt.into()));
    }

    if args.iter.report.is_some() {
        let body = json(&SolveJson {
            kind: problem.kind(),
            formulation: if formulation == Formulation::Qp {
                "qp"
            } else {
                "pwls"
            },
            report: &report,
            condition: condition.into(),
            qp_minimizer: extra.0,
            objective: extra.1,
            kkt: extra.2,
        });
        write_report(args.iter.report.as_deref(), &body)?;
    }

    Ok(Outcome {
        stdout: out,
        exit_code: exit_code(report.status),
    })
}

pub fn cmd_project(args: &ProjectArgs) -> Result<Outcome, CommandError> {
    let file = ProblemFile::read(&args.problem)?;
    let Problem::Cone(cone) = file.validate()? else {
        return Err(ProblemError::WrongKind {
            expected: "cone",
            found: file.kind(),
        }
        .into());
    };
    let n = cone.z().len();
    let opts = ProjectionOptions {
        start: Some(starting_point(&args.iter.x0, n, args.iter.seed)?),
        solver: solver_options(&args.iter, n)?,
    };
    let proj = cone_projection(&cone, &opts)?;

    let mut out = String::new();
    describe(&mut out, &proj.report, args.iter.trace);
    let _ = writeln!(out, "v: {}", json(&proj.v));
    let _ = writeln!(out, "projection: {}", json(&proj.projection));
    let _ = writeln!(out, "kkt_max: {:e}", proj.kkt.max());

    if args.iter.report.is_some() {
        let body = json(&ProjectJson {
            v: &proj.v,
            projection: &proj.projection,
            kkt: proj.kkt.into(),
            report: &proj.report,
        });
        write_report(args.iter.report.as_deref(), &body)?;
    }

    Ok(Outcome {
        stdout: out,
        exit_code: exit_code(proj.report.status),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_cover_every_status() {
        assert_eq!(exit_code(SolveStatus::Converged), 0);
        assert_eq!(exit_code(SolveStatus::ConvergedExact), 0);
        assert_eq!(exit_code(SolveStatus::Cycled), 2);
        assert_eq!(exit_code(SolveStatus::MaxIterations), 3);
        assert_eq!(exit_code(SolveStatus::SingularJacobian), 4);
    }

    #[test]
    fn starting_point_keywords() {
        assert_eq!(starting_point("zero", 3, 0).unwrap(), vec![0.0; 3]);
        let a = starting_point("random", 4, 9).unwrap();
        assert_eq!(a, starting_point("random", 4, 9).unwrap());
        assert!(a.iter().all(|v| v.abs() <= 1.0));
        assert!(starting_point("/nonexistent/x0.json", 2, 0).is_err());
    }
}
