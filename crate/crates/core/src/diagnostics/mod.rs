//! Executable versions of the analytic devices used to study SGD under weak
//! assumptions: local Hölder constants, the `L_ε` variation, stopping times,
//! outcome classification, assumption-violation witnesses, and Monte Carlo
//! and finite-difference cross-checks of the closed forms.
//!
//! Suprema over balls are estimated from finitely many test points and are
//! therefore lower bounds of the true suprema.

mod ball;
mod holder;
mod montecarlo;
mod outcome;
mod stopping;
mod witness;

use thiserror::Error;

use crate::problems::ProblemError;

pub use ball::{ball_bounds, BallBounds};
pub use holder::{l_epsilon, local_holder, BallSampler, HolderEstimate, LEpsilon};
pub use montecarlo::{
    exact_second_moment, fd_gradient, fd_hessian, max_rel_err, mc_moment, support_mean_grad, trace_variance,
    MomentEstimate, MC_CHUNK,
};
pub use outcome::{
    classify_outcome, classify_points, ClassifyConfig, OutcomeClassification, OutcomeVerdict, Thresholds,
};
pub use stopping::{descent_gap, detect_stop_times, StopScan, StopTimes};
pub use witness::{
    witness_l0l1, witness_lipschitz, witness_noise, Assumption, Challenge, NoiseChallenge, WitnessOutcome,
    WitnessReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("theta and phi coincide; the Hölder ratio is undefined")]
    CoincidentPoints,
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("radius must be finite and nonnegative, got {0}")]
    InvalidRadius(f64),
    #[error("records k = {from} and k = {to} are not consecutive; stop-time scans need stride 1 after j")]
    StrideNotOne { from: u64, to: u64 },
    #[error("trajectory has {got} usable records, at least {need} required")]
    TooFewRecords { got: usize, need: usize },
    #[error("window fraction must lie in (0, 1], got {0}")]
    InvalidWindow(f64),
    #[error("threshold `{name}` must be positive and finite, got {value}")]
    InvalidThreshold { name: &'static str, value: f64 },
    #[error("Monte Carlo needs n >= 100 samples, got {0}")]
    TooFewSamples(u64),
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("challenge constant `{name}` = {value} is invalid: {reason}")]
    InvalidConstant {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("{assumption} challenges are not defined for problem `{problem}`")]
    UnsupportedChallenge { problem: String, assumption: String },
    #[error("witness search on `{problem}` left the representable range at parameter {parameter:e}: {reason}")]
    SearchExhausted {
        problem: String,
        parameter: f64,
        reason: String,
    },
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), DiagnosticsError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(DiagnosticsError::InvalidAlpha(alpha))
    }
}

/// `‖Δg‖ / ‖Δx‖^α`.
pub(crate) fn holder_ratio(dg: f64, dx: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        dg / dx
    } else {
        dg / dx.powf(alpha)
    }
}
