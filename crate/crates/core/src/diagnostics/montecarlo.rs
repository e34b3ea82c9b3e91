//! Monte Carlo moments with jackknife errors, exact support expectations, and
//! central finite differences.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::DiagnosticsError;
use crate::problems::Problem;
use crate::rng::{CounterStreams, Domain};

/// Samples per parallel chunk; chunk `i` reads stream `i`.
pub const MC_CHUNK: u64 = 65_536;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: u64,
    pub power: f64,
}

/// Empirical mean of `‖ḟ(θ, X)‖₂^power` over `n` draws with its jackknife
/// standard error. Chunks are drawn in parallel and reduced in chunk order,
/// so the result depends only on `(θ, power, n, seed)`.
pub fn mc_moment(
    problem: &Problem,
    theta: &[f64],
    power: f64,
    n: u64,
    seed: u64,
) -> Result<MomentEstimate, DiagnosticsError> {
    if n < 100 {
        return Err(DiagnosticsError::TooFewSamples(n));
    }
    problem.check_theta(theta)?;
    let streams = CounterStreams::new(seed, Domain::MonteCarlo);
    let chunks = n.div_ceil(MC_CHUNK);
    let values: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = MC_CHUNK.min(n - c * MC_CHUNK);
            let mut rng = streams.stream(c);
            let mut g = vec![0.0; problem.dim()];
            (0..len)
                .map(|_| {
                    let x = problem.sample(&mut rng);
                    problem.stoch_grad_into(theta, &x, &mut g)?;
                    let sq: f64 = g.iter().map(|v| v * v).sum();
                    Ok(if power == 2.0 { sq } else { sq.sqrt().powf(power) })
                })
                .collect::<Result<Vec<f64>, DiagnosticsError>>()
        })
        .collect::<Result<_, _>>()?;

    let first = values[0][0];
    if values.iter().flatten().all(|v| v.to_bits() == first.to_bits()) {
        return Ok(MomentEstimate {
            estimate: first,
            std_error: 0.0,
            n,
            power,
        });
    }
    let total: f64 = values.iter().map(|c| c.iter().sum::<f64>()).sum();
    let nf = n as f64;
    let mean = total / nf;
    // Leave-one-out means m_i = (total − x_i)/(n − 1); their spread gives the
    // jackknife variance (n − 1)/n · Σ (m_i − m̄)².
    let ss: f64 = values
        .iter()
        .map(|c| {
            c.iter()
                .map(|x| {
                    let d = (total - x) / (nf - 1.0) - mean;
                    d * d
                })
                .sum::<f64>()
        })
        .sum();
    Ok(MomentEstimate {
        estimate: mean,
        std_error: ((nf - 1.0) / nf * ss).sqrt(),
        n,
        power,
    })
}

/// `Σ_x p(x) ḟ(θ, x)` over a finite support.
pub fn support_mean_grad(problem: &Problem, theta: &[f64]) -> Result<Option<Vec<f64>>, DiagnosticsError> {
    let Some(support) = problem.support() else {
        return Ok(None);
    };
    let mut acc = vec![0.0; problem.dim()];
    for (p, x) in support {
        let g = problem.stoch_grad(theta, &x)?;
        for (a, gi) in acc.iter_mut().zip(g) {
            *a += p * gi;
        }
    }
    Ok(Some(acc))
}

/// `E‖ḟ(θ, X)‖²` by enumerating a finite support.
pub fn exact_second_moment(problem: &Problem, theta: &[f64]) -> Result<Option<f64>, DiagnosticsError> {
    let Some(support) = problem.support() else {
        return Ok(None);
    };
    let mut m = 0.0;
    for (p, x) in support {
        let g = problem.stoch_grad(theta, &x)?;
        m += p * g.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(Some(m))
}

/// `E‖ḟ(θ, X) − Ḟ(θ)‖²`: by enumeration for finite laws, otherwise from the
/// closed-form second moment.
pub fn trace_variance(problem: &Problem, theta: &[f64]) -> Result<f64, DiagnosticsError> {
    let mean = problem.mean_grad(theta)?;
    if let Some(support) = problem.support() {
        let mut v = 0.0;
        for (p, x) in support {
            let g = problem.stoch_grad(theta, &x)?;
            v += p * g.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        return Ok(v);
    }
    let sq: f64 = mean.iter().map(|v| v * v).sum();
    Ok((problem.moment_bound(theta)? - sq).max(0.0))
}

fn check_step(h: f64) -> Result<(), DiagnosticsError> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(DiagnosticsError::InvalidStep(h))
    }
}

/// Central differences of `F`, coordinate-wise.
pub fn fd_gradient(problem: &Problem, theta: &[f64], h: f64) -> Result<Vec<f64>, DiagnosticsError> {
    check_step(h)?;
    problem.check_theta(theta)?;
    let mut x = theta.to_vec();
    let mut out = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + h;
        let up = problem.mean_loss(&x)?;
        x[i] = theta[i] - h;
        let down = problem.mean_loss(&x)?;
        x[i] = theta[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Central differences of `Ḟ`; column `j` differentiates along `e_j`.
pub fn fd_hessian(problem: &Problem, theta: &[f64], h: f64) -> Result<DMatrix<f64>, DiagnosticsError> {
    check_step(h)?;
    problem.check_theta(theta)?;
    let p = theta.len();
    let mut x = theta.to_vec();
    let mut out = DMatrix::zeros(p, p);
    for j in 0..p {
        x[j] = theta[j] + h;
        let up = problem.mean_grad(&x)?;
        x[j] = theta[j] - h;
        let down = problem.mean_grad(&x)?;
        x[j] = theta[j];
        for i in 0..p {
            out[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    Ok(out)
}

/// `‖a − b‖∞ / max(‖b‖∞, 1)`: relative error against the reference `b`,
/// absolute near zero.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(1.0, f64::max);
    diff / scale
}
