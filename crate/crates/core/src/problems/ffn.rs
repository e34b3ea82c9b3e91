//! Four-layer scalar sigmoid network with ridge penalty.
//!
//! `θ = (W₁, W₂, W₃, W₄)`, prediction `σ(Z · W₁W₂W₃W₄)`, cross-entropy loss
//! plus `½‖θ‖²`. The noisy variant draws `(Z, Y) ∈ {(0, 0), (1, 1)}`; the
//! noiseless variant draws `(Z, Y) ∈ {(−1, 0), (1, 1)}`, for which every
//! sample yields the same gradient.

use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use super::{logistic, softplus, Oracle, Sample};

const LN_2: f64 = std::f64::consts::LN_2;

/// `P = W₁W₂W₃W₄` and `v = ∂P/∂θ`.
fn product_and_partials(w: &[f64]) -> (f64, [f64; 4]) {
    let p = w[0] * w[1] * w[2] * w[3];
    let v = [
        w[3] * w[2] * w[1],
        w[3] * w[2] * w[0],
        w[3] * w[1] * w[0],
        w[2] * w[1] * w[0],
    ];
    (p, v)
}

fn ridge(w: &[f64]) -> f64 {
    0.5 * w.iter().map(|x| x * x).sum::<f64>()
}

/// `θ + c v`, written out so the noiseless per-sample and mean gradients
/// evaluate the same expression.
fn ridge_plus(w: &[f64], c: f64, v: &[f64; 4], out: &mut [f64]) {
    for i in 0..4 {
        out[i] = w[i] + c * v[i];
    }
}

/// Second derivatives of `P`: entry `(i, j)` is the product of the two
/// weights other than `i` and `j`.
fn product_hessian(w: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |i, j| {
        if i == j {
            0.0
        } else {
            (0..4).filter(|&m| m != i && m != j).map(|m| w[m]).product()
        }
    })
}

fn pair(x: &Sample) -> (f64, f64) {
    match *x {
        Sample::Pair { y, z } => (y, z),
        _ => unreachable!("support is checked by Problem"),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FeedForward;

impl Oracle for FeedForward {
    fn dim(&self) -> usize {
        4
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Sample {
        let v = if rng.gen::<bool>() { 1.0 } else { 0.0 };
        Sample::Pair { y: v, z: v }
    }

    fn support(&self) -> Option<Vec<(f64, Sample)>> {
        Some(vec![
            (0.5, Sample::Pair { y: 0.0, z: 0.0 }),
            (0.5, Sample::Pair { y: 1.0, z: 1.0 }),
        ])
    }

    fn contains(&self, x: &Sample) -> bool {
        matches!(*x, Sample::Pair { y, z } if (y == 0.0 && z == 0.0) || (y == 1.0 && z == 1.0))
    }

    fn loss(&self, w: &[f64], x: &Sample) -> f64 {
        let (_, z) = pair(x);
        let (p, _) = product_and_partials(w);
        if z == 0.0 {
            LN_2 + ridge(w)
        } else {
            softplus(-p) + ridge(w)
        }
    }

    fn stoch_grad(&self, w: &[f64], x: &Sample, out: &mut [f64]) {
        let (_, z) = pair(x);
        let (p, v) = product_and_partials(w);
        let c = if z == 0.0 { 0.0 } else { -logistic(-p) };
        ridge_plus(w, c, &v, out);
    }

    fn mean_loss(&self, w: &[f64]) -> f64 {
        let (p, _) = product_and_partials(w);
        0.5 * LN_2 + 0.5 * softplus(-p) + ridge(w)
    }

    fn mean_grad(&self, w: &[f64], out: &mut [f64]) {
        let (p, v) = product_and_partials(w);
        ridge_plus(w, -0.5 * logistic(-p), &v, out);
    }

    fn mean_hessian(&self, w: &[f64]) -> Option<DMatrix<f64>> {
        let (p, v) = product_and_partials(w);
        let v = nalgebra::DVector::from_column_slice(&v);
        let curvature = 0.5 * logistic(p) * logistic(-p);
        let h = product_hessian(w) * (-0.5 * logistic(-p)) + &v * v.transpose() * curvature + DMatrix::identity(4, 4);
        Some(h)
    }

    fn moment_bound(&self, w: &[f64]) -> f64 {
        let mut g = [0.0; 4];
        self.mean_grad(w, &mut g);
        let (p, v) = product_and_partials(w);
        let s = logistic(-p);
        let vv: f64 = v.iter().map(|x| x * x).sum();
        g.iter().map(|x| x * x).sum::<f64>() + 0.25 * s * s * vv
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NoiselessFeedForward;

impl Oracle for NoiselessFeedForward {
    fn dim(&self) -> usize {
        4
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Sample {
        if rng.gen::<bool>() {
            Sample::Pair { y: 1.0, z: 1.0 }
        } else {
            Sample::Pair { y: 0.0, z: -1.0 }
        }
    }

    fn support(&self) -> Option<Vec<(f64, Sample)>> {
        Some(vec![
            (0.5, Sample::Pair { y: 0.0, z: -1.0 }),
            (0.5, Sample::Pair { y: 1.0, z: 1.0 }),
        ])
    }

    fn contains(&self, x: &Sample) -> bool {
        matches!(*x, Sample::Pair { y, z } if (y == 0.0 && z == -1.0) || (y == 1.0 && z == 1.0))
    }

    fn loss(&self, w: &[f64], _x: &Sample) -> f64 {
        // Both samples give softplus(−P): y = 1 with z = 1, or y = 0 with z = −1.
        self.mean_loss(w)
    }

    fn stoch_grad(&self, w: &[f64], x: &Sample, out: &mut [f64]) {
        let (y, z) = pair(x);
        let (p, v) = product_and_partials(w);
        // z (σ(zP) − y) reduces to −σ(−P) for both support points.
        let c = if y == 1.0 {
            -logistic(-z * p)
        } else {
            z * logistic(z * p)
        };
        ridge_plus(w, c, &v, out);
    }

    fn mean_loss(&self, w: &[f64]) -> f64 {
        let (p, _) = product_and_partials(w);
        softplus(-p) + ridge(w)
    }

    fn mean_grad(&self, w: &[f64], out: &mut [f64]) {
        let (p, v) = product_and_partials(w);
        ridge_plus(w, -logistic(-p), &v, out);
    }

    fn moment_bound(&self, w: &[f64]) -> f64 {
        let mut g = [0.0; 4];
        self.mean_grad(w, &mut g);
        g.iter().map(|x| x * x).sum()
    }
}
