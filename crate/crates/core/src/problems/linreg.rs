//! Scalar linear regression `Y = Zθ* + ε` with gradient noise whose variance
//! grows with `(θ − θ*)²`.
//!
//! Only `E Z² = 1`, `E Z⁴ = 2` and `Var ε = 1` matter for the closed forms;
//! we realize them with `Z ∈ {−√2, 0, √2}` w.p. `{¼, ½, ¼}` and Rademacher
//! `ε`, which keeps the law finite so expectations can be enumerated.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use super::{Oracle, Sample};

const Z_VALUES: [f64; 3] = [-SQRT_2, 0.0, SQRT_2];
const Z_PROBS: [f64; 3] = [0.25, 0.5, 0.25];

#[derive(Debug, Clone)]
pub struct LinearRegression {
    theta_star: f64,
}

impl LinearRegression {
    pub fn new(theta_star: f64) -> Self {
        Self { theta_star }
    }

    pub fn theta_star(&self) -> f64 {
        self.theta_star
    }
}

impl Oracle for LinearRegression {
    fn dim(&self) -> usize {
        1
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Sample {
        let u: f64 = rng.gen();
        let z = if u < 0.25 {
            Z_VALUES[0]
        } else if u < 0.75 {
            Z_VALUES[1]
        } else {
            Z_VALUES[2]
        };
        let eps = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        Sample::Pair {
            y: z * self.theta_star + eps,
            z,
        }
    }

    fn support(&self) -> Option<Vec<(f64, Sample)>> {
        let mut out = Vec::with_capacity(6);
        for (z, pz) in Z_VALUES.iter().zip(Z_PROBS) {
            for eps in [-1.0, 1.0] {
                out.push((
                    0.5 * pz,
                    Sample::Pair {
                        y: z * self.theta_star + eps,
                        z: *z,
                    },
                ));
            }
        }
        Some(out)
    }

    fn contains(&self, x: &Sample) -> bool {
        match *x {
            Sample::Pair { y, z } => {
                let eps = y - z * self.theta_star;
                Z_VALUES.contains(&z) && ((eps - 1.0).abs() < 1e-9 || (eps + 1.0).abs() < 1e-9)
            }
            _ => false,
        }
    }

    fn loss(&self, theta: &[f64], x: &Sample) -> f64 {
        let Sample::Pair { y, z } = *x else { unreachable!() };
        let r = z * theta[0] - y;
        0.5 * r * r
    }

    fn stoch_grad(&self, theta: &[f64], x: &Sample, out: &mut [f64]) {
        let Sample::Pair { y, z } = *x else { unreachable!() };
        out[0] = z * (z * theta[0] - y);
    }

    fn mean_loss(&self, theta: &[f64]) -> f64 {
        let d = theta[0] - self.theta_star;
        0.5 * d * d + 0.5
    }

    fn mean_grad(&self, theta: &[f64], out: &mut [f64]) {
        out[0] = theta[0] - self.theta_star;
    }

    fn mean_hessian(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, 1.0))
    }

    fn moment_bound(&self, theta: &[f64]) -> f64 {
        let d = theta[0] - self.theta_star;
        2.0 * d * d + 1.0
    }
}
