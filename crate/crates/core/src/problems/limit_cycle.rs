//! Deterministic smooth objective whose outer branch winds around the unit
//! circle in polar-like coordinates `(r, φ) = (θ₁, θ₂)`.
//!
//! ```text
//! F(θ) = exp(1 / (θ₁² − 1))                          θ₁ < 1
//!        0                                           θ₁ = 1
//!        −exp(−1 / (θ₁² − 1)) · sin(1/(θ₁ − 1) − θ₂)   θ₁ > 1
//! ```
//!
//! Both branches vanish to all orders at `θ₁ = 1`, so `F` is smooth on
//! `θ₁ > −1`.

use rand::RngCore;

use super::{Oracle, Sample};

/// Points with `|θ₁ − 1|` below this are evaluated as lying on the circle.
pub const JUNCTION_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct LimitCycle;

impl Oracle for LimitCycle {
    fn dim(&self) -> usize {
        2
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> Sample {
        Sample::Unit
    }

    fn support(&self) -> Option<Vec<(f64, Sample)>> {
        Some(vec![(1.0, Sample::Unit)])
    }

    fn contains(&self, x: &Sample) -> bool {
        *x == Sample::Unit
    }

    fn check_domain(&self, theta: &[f64]) -> Result<(), String> {
        if theta[0] > -1.0 {
            Ok(())
        } else {
            Err(format!("theta_1 = {} must exceed -1", theta[0]))
        }
    }

    fn loss(&self, theta: &[f64], _x: &Sample) -> f64 {
        self.mean_loss(theta)
    }

    fn stoch_grad(&self, theta: &[f64], _x: &Sample, out: &mut [f64]) {
        self.mean_grad(theta, out)
    }

    fn mean_loss(&self, theta: &[f64]) -> f64 {
        let (r, phi) = (theta[0], theta[1]);
        let d = r - 1.0;
        if d.abs() < JUNCTION_BAND {
            0.0
        } else if d < 0.0 {
            (1.0 / (d * (r + 1.0))).exp()
        } else {
            -(-1.0 / (d * (r + 1.0))).exp() * (1.0 / d - phi).sin()
        }
    }

    fn mean_grad(&self, theta: &[f64], out: &mut [f64]) {
        let (r, phi) = (theta[0], theta[1]);
        let d = r - 1.0;
        let q = d * (r + 1.0);
        if d.abs() < JUNCTION_BAND {
            out[0] = 0.0;
            out[1] = 0.0;
        } else if d < 0.0 {
            let f = (1.0 / q).exp();
            out[0] = -f * 2.0 * r / (q * q);
            out[1] = 0.0;
        } else {
            let g = (-1.0 / q).exp();
            let a = 1.0 / d - phi;
            let (sa, ca) = a.sin_cos();
            out[0] = -g * (2.0 * r / (q * q) * sa - ca / (d * d));
            out[1] = g * ca;
        }
    }

    fn moment_bound(&self, theta: &[f64]) -> f64 {
        let mut g = [0.0; 2];
        self.mean_grad(theta, &mut g);
        g[0] * g[0] + g[1] * g[1]
    }
}
