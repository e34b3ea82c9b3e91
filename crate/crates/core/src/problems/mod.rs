//! Closed-form stochastic optimization problems.
//!
//! Each problem bundles a sampling law for `X` with exact oracles for the
//! per-sample loss `f(θ, x)` and gradient `ḟ(θ, x)`, the mean objective
//! `F(θ) = E f(θ, X)`, its gradient and (where available) Hessian, and the
//! moment bound `G(θ) ≥ E‖ḟ(θ, X)‖^{1+α}`.
//!
//! Oracles are implemented by the [`Oracle`] trait and wrapped by
//! [`Problem`], which validates dimensions, rejects non-finite inputs and
//! turns overflowing outputs into [`ProblemError::Overflow`] instead of
//! letting `inf` leak into trajectories.

mod ffn;
mod limit_cycle;
mod linreg;
mod poisson;
mod rnn;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use serde::Serialize;
use thiserror::Error;

pub use ffn::{FeedForward, NoiselessFeedForward};
pub use limit_cycle::{LimitCycle, JUNCTION_BAND};
pub use linreg::LinearRegression;
pub use poisson::PoissonRegression;
pub use rnn::Recurrent;

/// Stable ids of the shipped problems, in catalog order.
pub const PROBLEM_IDS: [&str; 6] = ["linreg", "ffn", "rnn", "poisson", "ffn-noiseless", "limit-cycle"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("unknown problem `{name}` (valid ids: {})", PROBLEM_IDS.join(", "))]
    UnknownProblem { name: String },
    #[error("dimension mismatch for `{problem}`: expected {expected}, got {got}")]
    DimensionMismatch {
        problem: String,
        expected: usize,
        got: usize,
    },
    #[error("non-finite parameter coordinate at index {index}")]
    NonFiniteInput { index: usize },
    #[error("parameter outside the domain of `{problem}`: {reason}")]
    Domain { problem: String, reason: String },
    #[error("sample {sample} is outside the support of `{problem}`")]
    OutsideSupport { problem: String, sample: String },
    #[error("{quantity} of `{problem}` overflowed at theta = {theta:?}")]
    Overflow {
        problem: String,
        quantity: &'static str,
        theta: Vec<f64>,
    },
    #[error("problem `{0}` has no Hessian oracle")]
    NoHessian(String),
}

/// One draw of the data variable `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Sample {
    /// Degenerate law of a deterministic problem.
    Unit,
    /// A label/feature pair `(Y, Z)`.
    Pair { y: f64, z: f64 },
    /// A label and a length-4 input sequence `(Y, Z₀, Z₁, Z₂, Z₃)`.
    Sequence { y: f64, z: [f64; 4] },
}

impl fmt::Display for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sample::Unit => write!(f, "()"),
            Sample::Pair { y, z } => write!(f, "(y={y}, z={z})"),
            Sample::Sequence { y, z } => {
                write!(f, "(y={y}, z=[{}, {}, {}, {}])", z[0], z[1], z[2], z[3])
            }
        }
    }
}

/// Raw closed forms of a problem. Implementations may return non-finite
/// values; [`Problem`] is responsible for checking them.
pub trait Oracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn sample(&self, rng: &mut dyn RngCore) -> Sample;

    /// The law as `(probability, sample)` pairs when it has finite support.
    fn support(&self) -> Option<Vec<(f64, Sample)>> {
        None
    }

    fn contains(&self, x: &Sample) -> bool;

    fn loss(&self, theta: &[f64], x: &Sample) -> f64;

    fn stoch_grad(&self, theta: &[f64], x: &Sample, out: &mut [f64]);

    fn mean_loss(&self, theta: &[f64]) -> f64;

    fn mean_grad(&self, theta: &[f64], out: &mut [f64]);

    fn mean_hessian(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn moment_bound(&self, theta: &[f64]) -> f64;

    /// Extra domain restrictions beyond finiteness.
    fn check_domain(&self, _theta: &[f64]) -> Result<(), String> {
        Ok(())
    }
}

/// Box (possibly a union of intervals per coordinate) used for randomized
/// consistency checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestBox {
    pub coords: Vec<Vec<(f64, f64)>>,
}

impl TestBox {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            coords: vec![vec![(-half_width, half_width)]; dim],
        }
    }

    pub fn point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.coords
            .iter()
            .map(|pieces| {
                let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
                let mut u = rng.gen::<f64>() * total;
                for &(a, b) in pieces {
                    if u <= b - a {
                        return a + u;
                    }
                    u -= b - a;
                }
                pieces.last().map(|p| p.1).unwrap_or(0.0)
            })
            .collect()
    }
}

/// A stochastic optimization problem with checked oracles.
#[derive(Clone)]
pub struct Problem {
    id: String,
    alpha: f64,
    f_lb: f64,
    optimum: Option<Vec<f64>>,
    test_box: TestBox,
    oracle: Arc<dyn Oracle>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("id", &self.id)
            .field("dim", &self.dim())
            .field("alpha", &self.alpha)
            .field("f_lb", &self.f_lb)
            .field("optimum", &self.optimum)
            .finish()
    }
}

/// Build one of the shipped problems by id. Linear regression uses `θ* = 1`;
/// see [`make_linreg`] for other values.
pub fn make_problem(name: &str) -> Result<Problem, ProblemError> {
    let p = match name {
        "linreg" => make_linreg(1.0),
        "ffn" => Problem::new(
            "ffn",
            1.0,
            0.5 * std::f64::consts::LN_2,
            Some(vec![0.0; 4]),
            TestBox::cube(4, 3.0),
            Arc::new(FeedForward),
        ),
        "rnn" => Problem::new(
            "rnn",
            1.0,
            0.5 * std::f64::consts::LN_2,
            Some(vec![0.0; 2]),
            TestBox::cube(2, 3.0),
            Arc::new(Recurrent),
        ),
        "poisson" => Problem::new(
            "poisson",
            1.0,
            1.0,
            Some(vec![0.0]),
            TestBox::cube(1, 2.0),
            Arc::new(PoissonRegression),
        ),
        "ffn-noiseless" => Problem::new(
            "ffn-noiseless",
            1.0,
            0.0,
            Some(vec![0.0; 4]),
            TestBox::cube(4, 3.0),
            Arc::new(NoiselessFeedForward),
        ),
        "limit-cycle" => Problem::new(
            "limit-cycle",
            1.0,
            -1.0,
            None,
            TestBox {
                coords: vec![vec![(0.0, 0.8), (1.2, 3.0)], vec![(-3.0, 3.0)]],
            },
            Arc::new(LimitCycle),
        ),
        _ => return Err(ProblemError::UnknownProblem { name: name.to_string() }),
    };
    Ok(p)
}

pub fn make_linreg(theta_star: f64) -> Problem {
    Problem::new(
        "linreg",
        1.0,
        0.5,
        Some(vec![theta_star]),
        TestBox::cube(1, 3.0),
        Arc::new(LinearRegression::new(theta_star)),
    )
}

impl Problem {
    /// Wrap a custom oracle. Used by tests and by callers experimenting with
    /// their own closed forms.
    pub fn new(
        id: &str,
        alpha: f64,
        f_lb: f64,
        optimum: Option<Vec<f64>>,
        test_box: TestBox,
        oracle: Arc<dyn Oracle>,
    ) -> Self {
        Self {
            id: id.to_string(),
            alpha,
            f_lb,
            optimum,
            test_box,
            oracle,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    /// Hölder exponent of the mean gradient.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn f_lb(&self) -> f64 {
        self.f_lb
    }

    pub fn optimum(&self) -> Option<&[f64]> {
        self.optimum.as_deref()
    }

    pub fn test_box(&self) -> &TestBox {
        &self.test_box
    }

    pub fn oracle(&self) -> &dyn Oracle {
        self.oracle.as_ref()
    }

    /// True when every sample produces the mean gradient.
    pub fn is_deterministic(&self) -> bool {
        matches!(self.oracle.support(), Some(s) if s.len() == 1)
    }

    pub fn support(&self) -> Option<Vec<(f64, Sample)>> {
        self.oracle.support()
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Sample {
        self.oracle.sample(rng)
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<(), ProblemError> {
        if theta.len() != self.dim() {
            return Err(ProblemError::DimensionMismatch {
                problem: self.id.clone(),
                expected: self.dim(),
                got: theta.len(),
            });
        }
        if let Some(index) = theta.iter().position(|x| !x.is_finite()) {
            return Err(ProblemError::NonFiniteInput { index });
        }
        self.oracle.check_domain(theta).map_err(|reason| ProblemError::Domain {
            problem: self.id.clone(),
            reason,
        })
    }

    fn check_sample(&self, x: &Sample) -> Result<(), ProblemError> {
        if self.oracle.contains(x) {
            Ok(())
        } else {
            Err(ProblemError::OutsideSupport {
                problem: self.id.clone(),
                sample: x.to_string(),
            })
        }
    }

    fn finite(&self, value: f64, quantity: &'static str, theta: &[f64]) -> Result<f64, ProblemError> {
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.overflow(quantity, theta))
        }
    }

    fn overflow(&self, quantity: &'static str, theta: &[f64]) -> ProblemError {
        ProblemError::Overflow {
            problem: self.id.clone(),
            quantity,
            theta: theta.to_vec(),
        }
    }

    pub fn loss(&self, theta: &[f64], x: &Sample) -> Result<f64, ProblemError> {
        self.check_theta(theta)?;
        self.check_sample(x)?;
        self.finite(self.oracle.loss(theta, x), "loss", theta)
    }

    pub fn stoch_grad_into(&self, theta: &[f64], x: &Sample, out: &mut [f64]) -> Result<(), ProblemError> {
        self.check_theta(theta)?;
        self.check_sample(x)?;
        self.oracle.stoch_grad(theta, x, out);
        if out.iter().all(|g| g.is_finite()) {
            Ok(())
        } else {
            Err(self.overflow("stochastic gradient", theta))
        }
    }

    pub fn stoch_grad(&self, theta: &[f64], x: &Sample) -> Result<Vec<f64>, ProblemError> {
        let mut out = vec![0.0; self.dim()];
        self.stoch_grad_into(theta, x, &mut out)?;
        Ok(out)
    }

    pub fn mean_loss(&self, theta: &[f64]) -> Result<f64, ProblemError> {
        self.check_theta(theta)?;
        self.finite(self.oracle.mean_loss(theta), "mean loss", theta)
    }

    pub fn mean_grad_into(&self, theta: &[f64], out: &mut [f64]) -> Result<(), ProblemError> {
        self.check_theta(theta)?;
        self.oracle.mean_grad(theta, out);
        if out.iter().all(|g| g.is_finite()) {
            Ok(())
        } else {
            Err(self.overflow("mean gradient", theta))
        }
    }

    pub fn mean_grad(&self, theta: &[f64]) -> Result<Vec<f64>, ProblemError> {
        let mut out = vec![0.0; self.dim()];
        self.mean_grad_into(theta, &mut out)?;
        Ok(out)
    }

    pub fn mean_hessian(&self, theta: &[f64]) -> Result<DMatrix<f64>, ProblemError> {
        self.check_theta(theta)?;
        let h = self
            .oracle
            .mean_hessian(theta)
            .ok_or_else(|| ProblemError::NoHessian(self.id.clone()))?;
        if h.iter().all(|x| x.is_finite()) {
            Ok(h)
        } else {
            Err(self.overflow("mean Hessian", theta))
        }
    }

    /// `G(θ)`: the closed-form `E‖ḟ(θ, X)‖₂^{1+α}` (all shipped problems use
    /// α = 1, so this is the second moment).
    pub fn moment_bound(&self, theta: &[f64]) -> Result<f64, ProblemError> {
        self.check_theta(theta)?;
        self.finite(self.oracle.moment_bound(theta), "moment bound", theta)
    }
}

// Numerically stable scalar helpers shared by the problem implementations.

/// `1 / (1 + e^{-x})`.
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)`.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}
