//! Discrete SGD with matrix steps, deterministic GD with scalar steps, and
//! fixed-step RK4 gradient flow.

mod flow;
mod iterate;

use serde::Serialize;
use thiserror::Error;

use crate::problems::ProblemError;
use crate::schedules::{classify_schedule, power_schedule, Verdict};

pub use flow::{empirical_order, run_flow, run_flow_strided, FlowPoint, FlowStatus, FlowTrajectory, BLOW_UP_NORM};
pub use iterate::{run_gd, run_gd_observed, run_sgd, run_sgd_observed};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("number of steps must be at least 1")]
    ZeroSteps,
    #[error("record stride must be at least 1")]
    ZeroStride,
    #[error("schedule dimension {schedule} does not match problem dimension {problem}")]
    DimensionMismatch { schedule: usize, problem: usize },
    #[error("custom schedule provides {len} matrices but the run needs {steps}")]
    ScheduleTooShort { len: usize, steps: u64 },
    #[error("invalid GD step sequence: {0}")]
    InvalidSteps(String),
    #[error("flow step h = {0} must be positive and finite")]
    InvalidFlowStep(f64),
    #[error("flow horizon T = {horizon} must be finite and at least h = {h}")]
    InvalidHorizon { horizon: f64, h: f64 },
}

/// One recorded iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub k: u64,
    pub theta: Vec<f64>,
    /// `F(θ_k)`; `+∞` if the closed form overflows at a finite iterate.
    pub f: f64,
    /// `‖Ḟ(θ_k)‖₂`; `+∞` on overflow.
    pub grad_norm: f64,
    pub theta_norm: f64,
    /// Extreme eigenvalues of the step matrix used at step `k`
    /// (`NaN` past the end of a finite schedule).
    pub lmin: f64,
    pub lmax: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// The update at `step` produced a non-finite iterate or an oracle
    /// overflowed; the run stopped there.
    NonFinite {
        step: u64,
        reason: String,
    },
}

/// First trigger indices of the stopping times, when a scan was attached.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StopEvents {
    pub j: Option<u64>,
    pub tau: Option<u64>,
    pub nu: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub problem: String,
    pub schedule: String,
    pub seed: Option<u64>,
    pub steps: u64,
    pub stride: u64,
    pub records: Vec<Record>,
    /// Last finite iterate.
    pub final_theta: Vec<f64>,
    pub status: RunStatus,
    pub events: StopEvents,
}

impl Trajectory {
    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectories always hold the k = 0 record")
    }

    pub fn thetas(&self) -> impl Iterator<Item = &[f64]> {
        self.records.iter().map(|r| r.theta.as_slice())
    }
}

/// Scalar step sizes `α_k` for deterministic GD.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarSteps {
    /// `α_k = c (k+1)^{-β}`; must satisfy `Σ α_k = ∞`, `Σ α_k² < ∞`.
    Power {
        c: f64,
        beta: f64,
    },
    Constant(f64),
    Sequence(Vec<f64>),
}

impl ScalarSteps {
    /// `α_k`, or `None` past the end of a finite sequence.
    pub fn at(&self, k: u64) -> Option<f64> {
        match self {
            ScalarSteps::Power { c, beta } => Some(c * ((k + 1) as f64).powf(-beta)),
            ScalarSteps::Constant(a) => Some(*a),
            ScalarSteps::Sequence(v) => v.get(k as usize).copied(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ScalarSteps::Power { c, beta } => format!("scalar-power(c={c}, beta={beta})"),
            ScalarSteps::Constant(a) => format!("constant({a})"),
            ScalarSteps::Sequence(v) => format!("sequence(len={})", v.len()),
        }
    }

    pub(crate) fn validate(&self, steps: u64) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::InvalidSteps(msg));
        match self {
            ScalarSteps::Power { c, beta } => {
                let s = power_schedule(*c, &[*beta], 1).map_err(|e| EngineError::InvalidSteps(e.to_string()))?;
                let report = classify_schedule(&s, 1.0);
                if report.p2 != Verdict::Holds || report.p3 != Verdict::Holds {
                    return bad(format!(
                        "c (k+1)^(-{beta}) violates sum a_k = inf, sum a_k^2 < inf (beta must lie in (0.5, 1])"
                    ));
                }
            }
            ScalarSteps::Constant(a) => {
                if !(a.is_finite() && *a >= 0.0) {
                    return bad(format!("constant step {a} must be finite and nonnegative"));
                }
            }
            ScalarSteps::Sequence(v) => {
                if let Some((k, a)) = v.iter().enumerate().find(|(_, a)| !(a.is_finite() && **a >= 0.0)) {
                    return bad(format!("step {k} = {a} must be finite and nonnegative"));
                }
                if (v.len() as u64) < steps {
                    return bad(format!("sequence has {} steps, run needs {steps}", v.len()));
                }
            }
        }
        Ok(())
    }
}
