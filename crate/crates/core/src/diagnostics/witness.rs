//! Certified violations of standard smoothness and noise assumptions.
//!
//! Each witness is a point (or pair of points) on a one-parameter curve along
//! which the challenged inequality eventually fails. The curve parameter is
//! located by doubling and bisection; the returned point always violates the
//! inequality, and [`WitnessReport::recompute`] re-derives both sides from the
//! problem oracles.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::diagnostics::{trace_variance, DiagnosticsError};
use crate::dist2;
use crate::problems::Problem;

const BISECTION_STEPS: usize = 60;
const MAX_PARAMETER: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assumption {
    #[serde(rename = "global-lipschitz")]
    GlobalLipschitz,
    #[serde(rename = "L0L1-smooth")]
    L0L1Smooth,
    #[serde(rename = "bounded-variance")]
    BoundedVariance,
    #[serde(rename = "expected-smoothness")]
    ExpectedSmoothness,
}

impl Assumption {
    pub const ALL: [Assumption; 4] = [
        Assumption::GlobalLipschitz,
        Assumption::L0L1Smooth,
        Assumption::BoundedVariance,
        Assumption::ExpectedSmoothness,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Assumption::GlobalLipschitz => "global-lipschitz",
            Assumption::L0L1Smooth => "L0L1-smooth",
            Assumption::BoundedVariance => "bounded-variance",
            Assumption::ExpectedSmoothness => "expected-smoothness",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Assumption {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Assumption::ALL
            .into_iter()
            .find(|a| a.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let ids: Vec<&str> = Assumption::ALL.iter().map(|a| a.id()).collect();
                format!("unknown assumption `{s}` (valid: {})", ids.join(", "))
            })
    }
}

/// The constants being challenged.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Challenge {
    /// `‖Ḟ(θ) − Ḟ(φ)‖₂ ≤ L ‖θ − φ‖₂`
    Lipschitz { l: f64 },
    /// `‖F̈(θ)‖_F ≤ L₀ ‖Ḟ(θ)‖₁ + L₁`
    L0L1 { l0: f64, l1: f64 },
    /// `E‖ḟ(θ, X) − Ḟ(θ)‖₂² ≤ B`
    Variance { b: f64 },
    /// `E‖ḟ(θ, X)‖₂² ≤ C₀ + C₁ F(θ) + C₂ ‖Ḟ(θ)‖₂²`
    ExpectedSmoothness { c0: f64, c1: f64, c2: f64 },
}

impl Challenge {
    pub fn assumption(&self) -> Assumption {
        match self {
            Challenge::Lipschitz { .. } => Assumption::GlobalLipschitz,
            Challenge::L0L1 { .. } => Assumption::L0L1Smooth,
            Challenge::Variance { .. } => Assumption::BoundedVariance,
            Challenge::ExpectedSmoothness { .. } => Assumption::ExpectedSmoothness,
        }
    }

    fn validate(&self) -> Result<(), DiagnosticsError> {
        let check = |name: &'static str, value: f64, positive: bool| {
            let ok = value.is_finite() && if positive { value > 0.0 } else { value >= 0.0 };
            if ok {
                Ok(())
            } else {
                Err(DiagnosticsError::InvalidConstant {
                    name,
                    value,
                    reason: if positive {
                        "must be positive and finite"
                    } else {
                        "must be nonnegative and finite"
                    },
                })
            }
        };
        match *self {
            Challenge::Lipschitz { l } => check("L", l, true),
            Challenge::L0L1 { l0, l1 } => check("L0", l0, false).and(check("L1", l1, false)),
            Challenge::Variance { b } => check("B", b, true),
            Challenge::ExpectedSmoothness { c0, c1, c2 } => check("C0", c0, false)
                .and(check("C1", c1, false))
                .and(check("C2", c2, false)),
        }
    }

    /// `(lhs, rhs)` of the challenged inequality at `points`.
    fn sides(&self, problem: &Problem, points: &[Vec<f64>]) -> Result<(f64, f64), DiagnosticsError> {
        let theta = &points[0];
        Ok(match *self {
            Challenge::Lipschitz { l } => {
                let phi = &points[1];
                let lhs = dist2(&problem.mean_grad(theta)?, &problem.mean_grad(phi)?);
                (lhs, l * dist2(theta, phi))
            }
            Challenge::L0L1 { l0, l1 } => {
                let h = problem.mean_hessian(theta)?;
                let g1: f64 = problem.mean_grad(theta)?.iter().map(|x| x.abs()).sum();
                (h.norm(), l0 * g1 + l1)
            }
            Challenge::Variance { b } => (trace_variance(problem, theta)?, b),
            Challenge::ExpectedSmoothness { c0, c1, c2 } => {
                let g2: f64 = problem.mean_grad(theta)?.iter().map(|x| x * x).sum();
                let rhs = c0 + c1 * problem.mean_loss(theta)? + c2 * g2;
                (problem.moment_bound(theta)?, rhs)
            }
        })
    }
}

/// Noise-side challenges accepted by [`witness_noise`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseChallenge {
    Variance(f64),
    ExpectedSmoothness { c0: f64, c1: f64, c2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub problem: String,
    pub assumption: Assumption,
    pub challenge: Challenge,
    /// The violation curve, e.g. `theta = (1, -1, w, w), phi = (1, 0, 0, 0)`.
    pub curve: String,
    pub parameter: f64,
    /// `θ`, followed by `φ` for two-point inequalities.
    pub points: Vec<Vec<f64>>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl WitnessReport {
    /// Recompute `(lhs, rhs, margin)` from the problem oracles alone.
    pub fn recompute(&self, problem: &Problem) -> Result<(f64, f64, f64), DiagnosticsError> {
        if problem.id() != self.problem {
            return Err(DiagnosticsError::UnsupportedChallenge {
                problem: problem.id().to_string(),
                assumption: format!("witness for `{}`", self.problem),
            });
        }
        let (lhs, rhs) = self.challenge.sides(problem, &self.points)?;
        Ok((lhs, rhs, lhs - rhs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum WitnessOutcome {
    Witness(WitnessReport),
    #[serde(rename = "no-witness-exists")]
    NoWitness {
        problem: String,
        assumption: Assumption,
        challenge: Challenge,
        reason: String,
    },
}

impl WitnessOutcome {
    pub fn report(&self) -> Option<&WitnessReport> {
        match self {
            WitnessOutcome::Witness(r) => Some(r),
            WitnessOutcome::NoWitness { .. } => None,
        }
    }
}

struct Curve<'a> {
    description: &'static str,
    start: f64,
    points: Box<dyn Fn(f64) -> Vec<Vec<f64>> + 'a>,
}

fn no_witness(problem: &Problem, challenge: Challenge, reason: &str) -> WitnessOutcome {
    WitnessOutcome::NoWitness {
        problem: problem.id().to_string(),
        assumption: challenge.assumption(),
        challenge,
        reason: reason.to_string(),
    }
}

fn unsupported(problem: &Problem, challenge: &Challenge) -> DiagnosticsError {
    DiagnosticsError::UnsupportedChallenge {
        problem: problem.id().to_string(),
        assumption: challenge.assumption().to_string(),
    }
}

fn report_at(
    problem: &Problem,
    challenge: &Challenge,
    curve: &Curve,
    w: f64,
) -> Result<WitnessReport, DiagnosticsError> {
    let points = (curve.points)(w);
    let (lhs, rhs) = challenge.sides(problem, &points)?;
    Ok(WitnessReport {
        problem: problem.id().to_string(),
        assumption: challenge.assumption(),
        challenge: challenge.clone(),
        curve: curve.description.to_string(),
        parameter: w,
        points,
        lhs,
        rhs,
        margin: lhs - rhs,
    })
}

/// Double the parameter until the inequality fails, then bisect back towards
/// the crossing, keeping the violating end.
fn search(problem: &Problem, challenge: &Challenge, curve: Curve) -> Result<WitnessOutcome, DiagnosticsError> {
    let exhausted = |w: f64, reason: String| DiagnosticsError::SearchExhausted {
        problem: problem.id().to_string(),
        parameter: w,
        reason,
    };
    let margin = |w: f64| -> Result<f64, DiagnosticsError> {
        let (lhs, rhs) = challenge
            .sides(problem, &(curve.points)(w))
            .map_err(|e| exhausted(w, e.to_string()))?;
        Ok(lhs - rhs)
    };
    let mut lo = curve.start;
    if margin(lo)? > 0.0 {
        return report_at(problem, challenge, &curve, lo).map(WitnessOutcome::Witness);
    }
    let mut hi = if lo > 0.0 { 2.0 * lo } else { 1.0 };
    while margin(hi)? <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > MAX_PARAMETER {
            return Err(exhausted(hi, "no violation found".to_string()));
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if margin(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    report_at(problem, challenge, &curve, hi).map(WitnessOutcome::Witness)
}

fn theta_star(problem: &Problem) -> f64 {
    problem.optimum().map_or(0.0, |o| o[0])
}

/// Violate `‖Ḟ(θ) − Ḟ(φ)‖ ≤ L‖θ − φ‖`.
pub fn witness_lipschitz(problem: &Problem, l: f64) -> Result<WitnessOutcome, DiagnosticsError> {
    let challenge = Challenge::Lipschitz { l };
    challenge.validate()?;
    let curve = match problem.id() {
        "linreg" => {
            if l >= 1.0 {
                return Ok(no_witness(
                    problem,
                    challenge,
                    "mean gradient theta - theta* is 1-Lipschitz",
                ));
            }
            let ts = theta_star(problem);
            Curve {
                description: "theta = theta* + w, phi = theta*",
                start: 1.0,
                points: Box::new(move |w| vec![vec![ts + w], vec![ts]]),
            }
        }
        "ffn" | "ffn-noiseless" => Curve {
            description: "theta = (1, -1, w, w), phi = (1, 0, 0, 0)",
            start: 1.0,
            points: Box::new(|w| vec![vec![1.0, -1.0, w, w], vec![1.0, 0.0, 0.0, 0.0]]),
        },
        "rnn" => Curve {
            description: "theta = (-w, 1), phi = (0, 1)",
            start: 1.0,
            points: Box::new(|w| vec![vec![-w, 1.0], vec![0.0, 1.0]]),
        },
        "poisson" => Curve {
            description: "theta = w, phi = 0",
            start: 0.5,
            points: Box::new(|w| vec![vec![w], vec![0.0]]),
        },
        _ => return Err(unsupported(problem, &challenge)),
    };
    search(problem, &challenge, curve)
}

/// Violate `‖F̈(θ)‖_F ≤ L₀‖Ḟ(θ)‖₁ + L₁`.
pub fn witness_l0l1(problem: &Problem, l0: f64, l1: f64) -> Result<WitnessOutcome, DiagnosticsError> {
    let challenge = Challenge::L0L1 { l0, l1 };
    challenge.validate()?;
    let curve = match problem.id() {
        "linreg" => {
            if l1 >= 1.0 {
                return Ok(no_witness(problem, challenge, "Hessian is constant 1 <= L1"));
            }
            let ts = theta_star(problem);
            Curve {
                description: "theta = theta*",
                start: 0.0,
                points: Box::new(move |_| vec![vec![ts]]),
            }
        }
        "ffn" => Curve {
            description: "theta = (0, w, w, w)",
            start: 1.0,
            points: Box::new(|w| vec![vec![0.0, w, w, w]]),
        },
        "rnn" => Curve {
            description: "theta = (w, 0)",
            start: 1.0,
            points: Box::new(|w| vec![vec![w, 0.0]]),
        },
        "poisson" => Curve {
            description: "theta = w",
            start: 1.0,
            points: Box::new(|w| vec![vec![w]]),
        },
        _ => return Err(unsupported(problem, &challenge)),
    };
    search(problem, &challenge, curve)
}

/// Violate a bounded-variance or expected-smoothness bound.
pub fn witness_noise(problem: &Problem, challenge: NoiseChallenge) -> Result<WitnessOutcome, DiagnosticsError> {
    let challenge = match challenge {
        NoiseChallenge::Variance(b) => Challenge::Variance { b },
        NoiseChallenge::ExpectedSmoothness { c0, c1, c2 } => Challenge::ExpectedSmoothness { c0, c1, c2 },
    };
    challenge.validate()?;
    let curve = match (&challenge, problem.id()) {
        (Challenge::Variance { .. }, "ffn-noiseless" | "limit-cycle") => {
            return Ok(no_witness(
                problem,
                challenge,
                "stochastic gradients have zero variance",
            ));
        }
        (Challenge::Variance { b }, "linreg") => {
            // variance (θ − θ*)² + 1 exceeds B first at the integer offset d
            let mut d = (b - 1.0).max(0.0).sqrt().ceil();
            if d * d + 1.0 <= *b {
                d += 1.0;
            }
            let ts = theta_star(problem);
            Curve {
                description: "theta = theta* + d, smallest integer d with d^2 + 1 > B",
                start: d,
                points: Box::new(move |w| vec![vec![ts + w]]),
            }
        }
        (Challenge::Variance { .. }, "ffn") => Curve {
            description: "theta = (1, -1, w, w)",
            start: 1.0,
            points: Box::new(|w| vec![vec![1.0, -1.0, w, w]]),
        },
        (Challenge::Variance { .. }, "rnn") => Curve {
            description: "theta = (-w, 1)",
            start: 1.0,
            points: Box::new(|w| vec![vec![-w, 1.0]]),
        },
        (Challenge::Variance { .. }, "poisson") => Curve {
            description: "theta = w",
            start: 0.0,
            points: Box::new(|w| vec![vec![w]]),
        },
        (Challenge::ExpectedSmoothness { .. }, "poisson") => Curve {
            description: "theta = w, w >= log 4",
            start: 4f64.ln(),
            points: Box::new(|w| vec![vec![w]]),
        },
        _ => return Err(unsupported(problem, &challenge)),
    };
    search(problem, &challenge, curve)
}
