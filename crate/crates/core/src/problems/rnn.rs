//! Three-step scalar recurrent network with ridge penalty.
//!
//! Hidden state `h_t = W₁ h_{t−1} + Z_{t−1}` from `h₀ = 0`, output
//! `σ(W₂ h₃)`. With `Z₁ = Z₂ = Z₃ = 0` the logit is `P Z₀` for
//! `P = W₁³W₂`. The law puts mass ½ on `(Y, Z) = (1, 1, 0, 0, 0)` and ½ on
//! the all-zero sequence.

use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use super::{logistic, softplus, Oracle, Sample};

const LN_2: f64 = std::f64::consts::LN_2;
const ACTIVE: Sample = Sample::Sequence {
    y: 1.0,
    z: [1.0, 0.0, 0.0, 0.0],
};
const SILENT: Sample = Sample::Sequence { y: 0.0, z: [0.0; 4] };

#[derive(Debug, Clone, Copy)]
pub struct Recurrent;

fn logit_scale(w: &[f64]) -> f64 {
    w[0] * w[0] * w[0] * w[1]
}

/// `u = ḟ(θ, ACTIVE) − θ`.
fn active_direction(w: &[f64]) -> [f64; 2] {
    let s = logistic(-logit_scale(w));
    [-3.0 * w[0] * w[0] * w[1] * s, -w[0] * w[0] * w[0] * s]
}

fn unpack(x: &Sample) -> (f64, f64) {
    match *x {
        Sample::Sequence { y, z } => (y, z[0]),
        _ => unreachable!("support is checked by Problem"),
    }
}

impl Oracle for Recurrent {
    fn dim(&self) -> usize {
        2
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Sample {
        if rng.gen::<bool>() {
            ACTIVE
        } else {
            SILENT
        }
    }

    fn support(&self) -> Option<Vec<(f64, Sample)>> {
        Some(vec![(0.5, ACTIVE), (0.5, SILENT)])
    }

    fn contains(&self, x: &Sample) -> bool {
        *x == ACTIVE || *x == SILENT
    }

    fn loss(&self, w: &[f64], x: &Sample) -> f64 {
        let (y, z0) = unpack(x);
        let t = logit_scale(w) * z0;
        -t * y + softplus(t) + 0.5 * (w[0] * w[0] + w[1] * w[1])
    }

    fn stoch_grad(&self, w: &[f64], x: &Sample, out: &mut [f64]) {
        let (y, z0) = unpack(x);
        let t = logit_scale(w) * z0;
        // σ(t) − y, without cancellation when y = 1
        let resid = if y == 1.0 { -logistic(-t) } else { logistic(t) - y };
        let c = z0 * resid;
        out[0] = 3.0 * w[0] * w[0] * w[1] * c + w[0];
        out[1] = w[0] * w[0] * w[0] * c + w[1];
    }

    fn mean_loss(&self, w: &[f64]) -> f64 {
        let p = logit_scale(w);
        0.5 * (LN_2 + softplus(-p) + w[0] * w[0] + w[1] * w[1])
    }

    fn mean_grad(&self, w: &[f64], out: &mut [f64]) {
        let s = logistic(-logit_scale(w));
        out[0] = -1.5 * w[0] * w[0] * w[1] * s + w[0];
        out[1] = -0.5 * w[0] * w[0] * w[0] * s + w[1];
    }

    fn mean_hessian(&self, w: &[f64]) -> Option<DMatrix<f64>> {
        let (a, b) = (w[0], w[1]);
        let p = logit_scale(w);
        let s = logistic(-p);
        let d = logistic(p) * s;
        let h11 = 4.5 * a.powi(4) * b * b * d - 3.0 * a * b * s + 1.0;
        let h12 = 1.5 * a.powi(5) * b * d - 1.5 * a * a * s;
        let h22 = 0.5 * a.powi(6) * d + 1.0;
        Some(DMatrix::from_row_slice(2, 2, &[h11, h12, h12, h22]))
    }

    /// Exact `E‖ḟ‖² = ½‖θ + u‖² + ½‖θ‖²`.
    fn moment_bound(&self, w: &[f64]) -> f64 {
        let u = active_direction(w);
        let ww = w[0] * w[0] + w[1] * w[1];
        let wu = w[0] * u[0] + w[1] * u[1];
        let uu = u[0] * u[0] + u[1] * u[1];
        ww + wu + 0.5 * uu
    }
}
