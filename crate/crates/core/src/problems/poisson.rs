//! Poisson regression through the origin with `Y, Z` i.i.d. Poisson(1).
//!
//! `f(θ, (y, z)) = −yzθ + e^{θz}`, giving
//! `F(θ) = −θ + exp(e^θ − 1)`, minimized at `θ = 0` with `F(0) = 1`.

use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use super::{Oracle, Sample};

const MAX_COUNT: u32 = 170;

/// Poisson(1) by sequential inversion.
fn poisson_one(rng: &mut dyn RngCore) -> f64 {
    let u: f64 = rng.gen();
    let mut k = 0u32;
    let mut p = (-1.0f64).exp();
    let mut cdf = p;
    while u > cdf && k < MAX_COUNT {
        k += 1;
        p /= k as f64;
        cdf += p;
    }
    k as f64
}

#[derive(Debug, Clone, Copy)]
pub struct PoissonRegression;

fn pair(x: &Sample) -> (f64, f64) {
    match *x {
        Sample::Pair { y, z } => (y, z),
        _ => unreachable!("support is checked by Problem"),
    }
}

fn is_count(v: f64) -> bool {
    v >= 0.0 && v.fract() == 0.0 && v <= MAX_COUNT as f64
}

impl Oracle for PoissonRegression {
    fn dim(&self) -> usize {
        1
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Sample {
        let y = poisson_one(rng);
        let z = poisson_one(rng);
        Sample::Pair { y, z }
    }

    fn contains(&self, x: &Sample) -> bool {
        matches!(*x, Sample::Pair { y, z } if is_count(y) && is_count(z))
    }

    fn loss(&self, theta: &[f64], x: &Sample) -> f64 {
        let (y, z) = pair(x);
        -y * z * theta[0] + (theta[0] * z).exp()
    }

    fn stoch_grad(&self, theta: &[f64], x: &Sample, out: &mut [f64]) {
        let (y, z) = pair(x);
        out[0] = -y * z + z * (theta[0] * z).exp();
    }

    fn mean_loss(&self, theta: &[f64]) -> f64 {
        -theta[0] + theta[0].exp_m1().exp()
    }

    fn mean_grad(&self, theta: &[f64], out: &mut [f64]) {
        let t = theta[0];
        out[0] = (t.exp_m1() + t).exp_m1();
    }

    fn mean_hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let t = theta[0];
        Some(DMatrix::from_element(1, 1, (t.exp() + 1.0) * (t.exp_m1() + t).exp()))
    }

    fn moment_bound(&self, theta: &[f64]) -> f64 {
        let t = theta[0];
        let two = 2.0 * t;
        4.0 - 2.0 * (t.exp() + 1.0) * (t.exp_m1() + t).exp() + (two.exp() + 1.0) * (two.exp_m1() + two).exp()
    }
}
