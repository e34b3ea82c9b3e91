//! Stopping times `τ_j` (first failure of the Taylor–Hölder descent
//! inequality with constant `L_ε`) and `ν_j` (first step whose local Hölder
//! constant exceeds `L_ε`).

use serde::Serialize;

use crate::diagnostics::holder::Probe;
use crate::diagnostics::{check_alpha, l_epsilon, local_holder, DiagnosticsError};
use crate::engine::Trajectory;
use crate::problems::{Problem, ProblemError};
use crate::rng::{CounterStreams, Domain};
use crate::{dist2, norm2};

/// Relative slack before an estimate counts as exceeding `L_ε`.
const COMPARE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StopScan {
    pub alpha: f64,
    pub epsilon: f64,
    pub j: u64,
    /// Quasi-random points per sup estimate.
    pub n_samples: usize,
    pub seed: u64,
}

impl StopScan {
    pub fn new(alpha: f64, j: u64) -> Self {
        Self {
            alpha,
            epsilon: 1e-3,
            j,
            n_samples: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StopTimes {
    pub j: u64,
    pub tau: Option<u64>,
    pub nu: Option<u64>,
    /// Transitions `θ_k → θ_{k+1}` examined.
    pub scanned: u64,
    /// Transitions that left the `L_ε` ball and needed sup estimates.
    pub estimated: u64,
}

/// `F(θ) + Ḟ(θ)ᵀΔ + L/(1+α)‖Δ‖^{1+α} − F(φ)` with `Δ = φ − θ`; negative
/// exactly when the descent inequality with constant `L` fails.
pub fn descent_gap(problem: &Problem, theta: &[f64], phi: &[f64], l: f64, alpha: f64) -> Result<f64, DiagnosticsError> {
    let f0 = problem.mean_loss(theta)?;
    let f1 = problem.mean_loss(phi)?;
    let g = problem.mean_grad(theta)?;
    let lin: f64 = g
        .iter()
        .zip(phi.iter().zip(theta))
        .map(|(gi, (a, b))| gi * (a - b))
        .sum();
    let d = dist2(theta, phi);
    Ok(f0 + lin + l / (1.0 + alpha) * d.powf(1.0 + alpha) - f1)
}

fn overflowed(e: &DiagnosticsError) -> bool {
    matches!(e, DiagnosticsError::Problem(ProblemError::Overflow { .. }))
}

/// Outcome of one transition: `(τ fires, ν fires, needed estimates)`.
fn transition(
    problem: &Problem,
    theta: &[f64],
    phi: &[f64],
    scan: &StopScan,
    streams: &CounterStreams,
    k: u64,
) -> Result<(bool, bool, bool), DiagnosticsError> {
    let step = dist2(theta, phi);
    if step == 0.0 {
        return Ok((false, false, false));
    }
    let radius = match problem.moment_bound(theta) {
        Ok(g) => g.max(scan.epsilon).powf(1.0 / (1.0 + scan.alpha)),
        // G overflowed: the L_ε ball covers every representable step.
        Err(_) => return Ok((false, false, false)),
    };
    if step <= radius {
        // B̄(θ, ‖Δ‖) ⊆ B̄(θ, r): L(θ, φ) ≤ L_ε(θ), and the descent inequality
        // holds with L(θ, φ), hence with L_ε(θ).
        return Ok((false, false, false));
    }
    let mut rng = streams.stream(k);
    let le = match l_epsilon(problem, theta, scan.alpha, scan.epsilon, scan.n_samples, &mut rng) {
        Ok(le) => le,
        // the L_ε ball reaches where the oracles overflow: L_ε is unbounded
        Err(e) if overflowed(&e) => return Ok((false, false, true)),
        Err(e) => return Err(e),
    };
    let pair_value = match local_holder(problem, theta, phi, scan.alpha, scan.n_samples, &mut rng) {
        Ok(pair) => pair.value,
        Err(e) if overflowed(&e) => f64::INFINITY,
        Err(e) => return Err(e),
    };

    // Certified lower bound on L(θ, φ) implied by the descent inequality.
    let f0 = problem.mean_loss(theta)?;
    let f1 = match problem.mean_loss(phi) {
        Ok(f) => f,
        // F(φ) = +∞ violates the descent inequality for every finite constant
        Err(ProblemError::Overflow { .. }) => return Ok((true, true, true)),
        Err(e) => return Err(e.into()),
    };
    let g = Probe::new(problem, theta, scan.alpha)?;
    let lin: f64 = g
        .g_theta()
        .iter()
        .zip(phi.iter().zip(theta))
        .map(|(gi, (a, b))| gi * (a - b))
        .sum();
    let excess = f1 - f0 - lin;
    let noise = 8.0 * f64::EPSILON * (f1.abs() + f0.abs() + lin.abs());
    let l_taylor = (1.0 + scan.alpha) * (excess - noise) / step.powf(1.0 + scan.alpha);

    let threshold = le.value * (1.0 + COMPARE_SLACK);
    let l_pair = pair_value.max(le.sup_estimate).max(l_taylor);
    let tau = l_taylor > threshold;
    let nu = l_pair > threshold;
    Ok((tau, nu, true))
}

/// Scan `k > j` for the first `τ_j` and `ν_j` triggers. Every reported `τ`
/// index also triggers `ν`: the pair estimate always includes the lower
/// bound on `L(θ_k, θ_{k+1})` implied by a descent-inequality violation.
pub fn detect_stop_times(problem: &Problem, traj: &Trajectory, scan: &StopScan) -> Result<StopTimes, DiagnosticsError> {
    check_alpha(scan.alpha)?;
    if !(scan.epsilon.is_finite() && scan.epsilon > 0.0) {
        return Err(DiagnosticsError::InvalidEpsilon(scan.epsilon));
    }
    let start = traj.records.partition_point(|r| r.k <= scan.j);
    let window = &traj.records[start..];
    if let Some(first) = window.first() {
        if first.k != scan.j + 1 {
            let from = if start > 0 { traj.records[start - 1].k } else { scan.j };
            return Err(DiagnosticsError::StrideNotOne { from, to: first.k });
        }
    }
    for w in window.windows(2) {
        if w[1].k != w[0].k + 1 {
            return Err(DiagnosticsError::StrideNotOne {
                from: w[0].k,
                to: w[1].k,
            });
        }
    }
    let streams = CounterStreams::new(scan.seed, Domain::QuasiShift);
    let mut out = StopTimes {
        j: scan.j,
        tau: None,
        nu: None,
        scanned: 0,
        estimated: 0,
    };
    for w in window.windows(2) {
        let (theta, phi) = (&w[0].theta, &w[1].theta);
        if !norm2(phi).is_finite() {
            break;
        }
        let (tau, nu, estimated) = transition(problem, theta, phi, scan, &streams, w[0].k)?;
        out.scanned += 1;
        out.estimated += estimated as u64;
        if tau && out.tau.is_none() {
            out.tau = Some(w[0].k);
        }
        if nu && out.nu.is_none() {
            out.nu = Some(w[0].k);
        }
        if out.tau.is_some() && out.nu.is_some() {
            break;
        }
    }
    Ok(out)
}
