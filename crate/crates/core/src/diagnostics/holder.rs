//! Local Hölder constants `L(θ, φ)` and the variation `L_ε(θ)`.

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::diagnostics::{check_alpha, holder_ratio, DiagnosticsError};
use crate::problems::{Problem, ProblemError};
use crate::{dist2, norm2};

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(n);
    let mut c = 2u64;
    while primes.len() < n {
        if primes
            .iter()
            .take_while(|p| *p * *p <= c)
            .all(|p| !c.is_multiple_of(*p))
        {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    x
}

/// Quasi-random points of the closed unit ball: a Halton sequence with a
/// random Cranley–Patterson shift, mapped to `[−1, 1]^p` and filtered by
/// rejection. The first `n` points do not depend on how many are requested
/// later, so sup estimates are monotone in the sample count.
#[derive(Debug, Clone)]
pub struct BallSampler {
    bases: Vec<u64>,
    shift: Vec<f64>,
    index: u64,
}

impl BallSampler {
    pub fn new(dim: usize, rng: &mut dyn RngCore) -> Self {
        Self {
            bases: first_primes(dim),
            shift: (0..dim).map(|_| rng.gen::<f64>()).collect(),
            index: 0,
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        loop {
            self.index += 1;
            let y: Vec<f64> = self
                .bases
                .iter()
                .zip(&self.shift)
                .map(|(&b, s)| 2.0 * (radical_inverse(self.index, b) + s).fract() - 1.0)
                .collect();
            if norm2(&y) <= 1.0 {
                return y;
            }
        }
    }
}

/// Ratio evaluator anchored at `θ`.
pub(crate) struct Probe<'a> {
    problem: &'a Problem,
    theta: &'a [f64],
    g_theta: Vec<f64>,
    alpha: f64,
    buf: Vec<f64>,
}

impl<'a> Probe<'a> {
    pub(crate) fn new(problem: &'a Problem, theta: &'a [f64], alpha: f64) -> Result<Self, DiagnosticsError> {
        let g_theta = problem.mean_grad(theta)?;
        Ok(Self {
            problem,
            theta,
            g_theta,
            alpha,
            buf: vec![0.0; theta.len()],
        })
    }

    pub(crate) fn g_theta(&self) -> &[f64] {
        &self.g_theta
    }

    /// Ratio at `ψ`; `None` when `ψ = θ` or `ψ` is outside the domain, `+∞`
    /// when the gradient at `ψ` overflows.
    fn ratio_at(&mut self, psi: &[f64]) -> Option<f64> {
        let dx = dist2(psi, self.theta);
        if dx == 0.0 {
            return None;
        }
        match self.problem.mean_grad_into(psi, &mut self.buf) {
            Ok(()) => Some(holder_ratio(dist2(&self.buf, &self.g_theta), dx, self.alpha)),
            Err(ProblemError::Overflow { .. }) => Some(f64::INFINITY),
            Err(_) => None,
        }
    }

    /// Sup of the ratio over `n` quasi-random points of `B̄(θ, radius)`,
    /// optionally preceded by the `2p` axis boundary points.
    pub(crate) fn sup_over_ball(&mut self, radius: f64, n: usize, axes: bool, rng: &mut dyn RngCore) -> (f64, usize) {
        let p = self.theta.len();
        let mut sup: f64 = 0.0;
        let mut used = 0;
        if radius == 0.0 {
            return (sup, used);
        }
        let mut psi = vec![0.0; p];
        if axes {
            for i in 0..p {
                for sign in [1.0, -1.0] {
                    psi.copy_from_slice(self.theta);
                    psi[i] += sign * radius;
                    if let Some(r) = self.ratio_at(&psi) {
                        sup = sup.max(r);
                        used += 1;
                    }
                }
            }
        }
        let mut sampler = BallSampler::new(p, rng);
        for _ in 0..n {
            let y = sampler.next_point();
            for i in 0..p {
                psi[i] = self.theta[i] + radius * y[i];
            }
            if let Some(r) = self.ratio_at(&psi) {
                sup = sup.max(r);
                used += 1;
            }
        }
        (sup, used)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub alpha: f64,
    /// Lower bound on `L(θ, φ)`.
    pub value: f64,
    /// `‖Ḟ(φ) − Ḟ(θ)‖ / ‖φ − θ‖^α`.
    pub endpoint_ratio: f64,
    pub samples_used: usize,
    pub radius: f64,
}

/// Estimate `L(θ, φ) = sup_{ψ ∈ B̄(θ, ‖φ−θ‖)} ‖Ḟ(ψ) − Ḟ(θ)‖ / ‖ψ − θ‖^α` from
/// the endpoint `φ` and `n_samples` quasi-random points of the ball.
pub fn local_holder(
    problem: &Problem,
    theta: &[f64],
    phi: &[f64],
    alpha: f64,
    n_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<HolderEstimate, DiagnosticsError> {
    check_alpha(alpha)?;
    problem.check_theta(phi)?;
    let mut probe = Probe::new(problem, theta, alpha)?;
    let radius = dist2(theta, phi);
    if radius == 0.0 {
        return Err(DiagnosticsError::CoincidentPoints);
    }
    let g_phi = problem.mean_grad(phi)?;
    let endpoint_ratio = holder_ratio(dist2(&g_phi, probe.g_theta()), radius, alpha);
    let (sup, used) = probe.sup_over_ball(radius, n_samples, false, rng);
    Ok(HolderEstimate {
        theta: theta.to_vec(),
        phi: phi.to_vec(),
        alpha,
        value: endpoint_ratio.max(sup),
        endpoint_ratio,
        samples_used: used + 1,
        radius,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LEpsilon {
    pub theta: Vec<f64>,
    /// `L_ε(θ)`: the sup estimate, or `ε` when that estimate is zero.
    pub value: f64,
    pub sup_estimate: f64,
    /// `(G(θ) ∨ ε)^{1/(1+α)}`
    pub radius: f64,
    pub moment: f64,
    pub fallback: bool,
    pub samples_used: usize,
}

/// `L_ε(θ)`: the Hölder sup over the ball of radius `(G(θ) ∨ ε)^{1/(1+α)}`,
/// falling back to `ε` when it is zero. The estimate uses the `2p` axis
/// boundary points and `n_samples` quasi-random points.
pub fn l_epsilon(
    problem: &Problem,
    theta: &[f64],
    alpha: f64,
    epsilon: f64,
    n_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<LEpsilon, DiagnosticsError> {
    check_alpha(alpha)?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(DiagnosticsError::InvalidEpsilon(epsilon));
    }
    let moment = problem.moment_bound(theta)?;
    let radius = moment.max(epsilon).powf(1.0 / (1.0 + alpha));
    let mut probe = Probe::new(problem, theta, alpha)?;
    let (sup, used) = probe.sup_over_ball(radius, n_samples, true, rng);
    let fallback = sup == 0.0;
    Ok(LEpsilon {
        theta: theta.to_vec(),
        value: if fallback { epsilon } else { sup },
        sup_estimate: sup,
        radius,
        moment,
        fallback,
        samples_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_problem;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampler_stays_in_unit_ball_and_is_prefix_stable() {
        let mut a = BallSampler::new(4, &mut ChaCha8Rng::seed_from_u64(1));
        let mut b = BallSampler::new(4, &mut ChaCha8Rng::seed_from_u64(1));
        let xs: Vec<Vec<f64>> = (0..200).map(|_| a.next_point()).collect();
        assert!(xs.iter().all(|x| norm2(x) <= 1.0));
        let ys: Vec<Vec<f64>> = (0..50).map(|_| b.next_point()).collect();
        assert_eq!(&xs[..50], &ys[..]);
    }

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(first_primes(5), vec![2, 3, 5, 7, 11]);
    }

    #[test]
    fn linreg_ratio_is_one() {
        let p = make_problem("linreg").unwrap();
        let est = local_holder(&p, &[1.0], &[3.0], 1.0, 64, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((est.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_samples_is_endpoint_ratio() {
        let p = make_problem("ffn").unwrap();
        let est = local_holder(
            &p,
            &[0.1; 4],
            &[0.5, -0.2, 0.3, 1.0],
            1.0,
            0,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(est.value, est.endpoint_ratio);
        assert_eq!(est.samples_used, 1);
    }

    #[test]
    fn coincident_points_rejected() {
        let p = make_problem("linreg").unwrap();
        let err = local_holder(&p, &[1.0], &[1.0], 1.0, 4, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert_eq!(err, DiagnosticsError::CoincidentPoints);
    }

    #[test]
    fn poisson_endpoint_bound() {
        let p = make_problem("poisson").unwrap();
        let est = local_holder(&p, &[0.0], &[1.0], 1.0, 32, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let e = std::f64::consts::E;
        assert!(est.value >= e.powf(e) - 1.0 - 1e-12);
    }

    #[test]
    fn l_epsilon_linreg_at_optimum() {
        let p = make_problem("linreg").unwrap();
        let le = l_epsilon(&p, &[1.0], 1.0, 1e-3, 16, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(le.radius, 1.0);
        assert!((le.value - 1.0).abs() < 1e-15);
        assert!(!le.fallback);
    }
}
