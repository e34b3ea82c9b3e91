use std::io::Write;

use serde::Serialize;
use sgdlab::diagnostics::{fd_gradient, fd_hessian, max_rel_err, mc_moment, support_mean_grad, DiagnosticsError};
use sgdlab::rng::{CounterStreams, Domain};
use sgdlab::{make_problem, Problem, ProblemError, PROBLEM_IDS};

use super::emit;
use crate::output::report_json;
use crate::{CliError, ValidateArgs};

pub const GRAD_TOL: f64 = 1e-6;
pub const HESSIAN_TOL: f64 = 1e-5;
pub const UNBIASED_TOL: f64 = 1e-12;
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemValidation {
    pub problem: String,
    pub points: usize,
    /// Max over the points of `‖FD − Ḟ‖∞ / max(‖Ḟ‖∞, 1)`.
    pub grad_max_rel_err: f64,
    pub hessian_max_rel_err: Option<f64>,
    /// Max absolute gap between the support-weighted stochastic gradient and
    /// `Ḟ`; `None` for infinite supports.
    pub unbiased_max_abs_err: Option<f64>,
    pub mc_theta: Vec<f64>,
    pub mc_n: u64,
    pub mc_seed: u64,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub moment_exact: f64,
    pub moment_rel_err: f64,
    /// `|estimate − exact| / stderr`; `None` when the standard error is zero.
    pub moment_z: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub thresholds: Thresholds,
    pub problems: Vec<ProblemValidation>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    pub grad_max_rel_err: f64,
    pub hessian_max_rel_err: f64,
    pub unbiased_max_abs_err: f64,
    pub moment_z: f64,
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

pub fn validate_problem(
    problem: &Problem,
    seed: u64,
    points: usize,
    n: u64,
    theta: &[f64],
) -> Result<ProblemValidation, CliError> {
    let mut rng = CounterStreams::new(seed, Domain::Refinement).stream(0);
    let mut grad_err: f64 = 0.0;
    let mut hess_err: Option<f64> = None;
    let mut unbiased: Option<f64> = None;
    for _ in 0..points {
        let t = problem.test_box().point(&mut rng);
        let g = problem.mean_grad(&t).map_err(numerical)?;
        grad_err = grad_err.max(max_rel_err(&fd_gradient(problem, &t, FD_STEP).map_err(numerical)?, &g));
        match problem.mean_hessian(&t) {
            Ok(h) => {
                let fd = fd_hessian(problem, &t, FD_STEP).map_err(numerical)?;
                let e = (&fd - &h).amax() / h.amax().max(1.0);
                hess_err = Some(hess_err.unwrap_or(0.0).max(e));
            }
            Err(ProblemError::NoHessian { .. }) => {}
            Err(e) => return Err(numerical(e)),
        }
        if let Some(avg) = support_mean_grad(problem, &t).map_err(numerical)? {
            let e = avg.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            unbiased = Some(unbiased.unwrap_or(0.0).max(e));
        }
    }
    let est = mc_moment(problem, theta, 2.0, n, seed).map_err(|e| match e {
        DiagnosticsError::TooFewSamples(_) => CliError::Usage(e.to_string()),
        other => numerical(other),
    })?;
    let exact = problem.moment_bound(theta).map_err(numerical)?;
    let gap = (est.estimate - exact).abs();
    let moment_z = (est.std_error > 0.0).then(|| gap / est.std_error);
    let moment_ok = match moment_z {
        Some(z) => z <= 3.0,
        None => gap <= 1e-12 * exact.abs().max(1.0),
    };
    let passed = grad_err < GRAD_TOL
        && hess_err.is_none_or(|e| e < HESSIAN_TOL)
        && unbiased.is_none_or(|e| e < UNBIASED_TOL)
        && moment_ok;
    Ok(ProblemValidation {
        problem: problem.id().to_string(),
        points,
        grad_max_rel_err: grad_err,
        hessian_max_rel_err: hess_err,
        unbiased_max_abs_err: unbiased,
        mc_theta: theta.to_vec(),
        mc_n: n,
        mc_seed: seed,
        mc_estimate: est.estimate,
        mc_stderr: est.std_error,
        moment_exact: exact,
        moment_rel_err: gap / exact.abs().max(f64::MIN_POSITIVE),
        moment_z,
        passed,
    })
}

pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ids: Vec<&str> = if args.problem == "all" {
        PROBLEM_IDS.to_vec()
    } else {
        vec![args.problem.as_str()]
    };
    let mut problems = Vec::new();
    for id in ids {
        let p = make_problem(id).map_err(|e| CliError::Usage(e.to_string()))?;
        let theta = match &args.theta {
            Some(t) => t.0.clone(),
            None => vec![0.5; p.dim()],
        };
        p.check_theta(&theta)
            .map_err(|e| CliError::Usage(format!("--theta for {id}: {e}")))?;
        problems.push(validate_problem(&p, args.seed, args.points, args.n, &theta)?);
    }
    let passed = problems.iter().all(|p| p.passed);
    let report = ValidationReport {
        seed: args.seed,
        thresholds: Thresholds {
            grad_max_rel_err: GRAD_TOL,
            hessian_max_rel_err: HESSIAN_TOL,
            unbiased_max_abs_err: UNBIASED_TOL,
            moment_z: 3.0,
        },
        problems,
        passed,
    };
    emit(out, &report_json("validation", &report))?;
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .problems
            .iter()
            .filter(|p| !p.passed)
            .map(|p| p.problem.as_str())
            .collect();
        Err(CliError::Numerical(format!(
            "validation failed for {}",
            failed.join(", ")
        )))
    }
}
