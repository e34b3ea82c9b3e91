//! A test bed for the asymptotic behaviour of stochastic gradient descent on
//! problems whose gradients are only locally Hölder continuous and whose
//! gradient noise is unbounded.
//!
//! The crate is organised around five pieces:
//!
//! * [`problems`]: closed-form stochastic problems (linear regression, two
//!   small sigmoid networks, Poisson regression, a noiseless network and a
//!   deterministic limit-cycle field) with exact sample, loss, gradient,
//!   Hessian and moment oracles.
//! * [`schedules`]: matrix step-size sequences and their admissibility
//!   analysis (positive definiteness, summability of `λ_max^{1+α}`,
//!   divergence of `Σ λ_min`, condition-number decay).
//! * [`engine`]: SGD with matrix steps, deterministic GD with scalar steps,
//!   and fixed-step RK4 gradient flow.
//! * [`diagnostics`]: local Hölder constants, the `L_ε` variation, stopping
//!   times, outcome classification, assumption-violation witnesses and Monte
//!   Carlo moment checks.
//! * [`rng`]: counter-based random streams so that every draw is addressed by
//!   `(seed, index)`.

pub mod diagnostics;
pub mod engine;
pub mod problems;
pub mod rng;
pub mod schedules;
mod special;

pub use problems::{make_problem, Problem, ProblemError, Sample, PROBLEM_IDS};
pub use schedules::{power_schedule, StepSchedule};

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
