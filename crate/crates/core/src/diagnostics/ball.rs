//! Suprema of `G`, `(1+α)‖Ḟ‖` and the Hölder ratio over `B̄(0, R)`.

use rand::RngCore;
use serde::Serialize;

use crate::diagnostics::holder::BallSampler;
use crate::diagnostics::{check_alpha, holder_ratio, DiagnosticsError};
use crate::problems::Problem;
use crate::{dist2, norm2};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallBounds {
    pub radius: f64,
    pub alpha: f64,
    /// Lower bound on the Hölder constant over the ball.
    pub l_r: f64,
    /// Lower bound on `sup G`.
    pub g_r: f64,
    /// Lower bound on `sup (1+α)‖Ḟ‖₂`.
    pub df_r: f64,
    pub grid_density: usize,
    pub grid_points: usize,
    pub refinement_points: usize,
    pub pairs: usize,
}

/// Estimate the ball suprema from a regular grid with `grid_density` nodes
/// per axis (restricted to the ball) plus `refine` quasi-random points.
/// The Hölder ratio is maximized over axis-adjacent grid pairs, all pairs of
/// refinement points, and every point paired with the center.
pub fn ball_bounds(
    problem: &Problem,
    radius: f64,
    alpha: f64,
    grid_density: usize,
    refine: usize,
    rng: &mut dyn RngCore,
) -> Result<BallBounds, DiagnosticsError> {
    check_alpha(alpha)?;
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(DiagnosticsError::InvalidRadius(radius));
    }
    let p = problem.dim();
    let m = if radius == 0.0 { 1 } else { grid_density.max(1) };
    let coord = |i: usize| {
        if m == 1 {
            0.0
        } else {
            -radius + 2.0 * radius * i as f64 / (m - 1) as f64
        }
    };

    let center = vec![0.0; p];
    let g_center = problem.mean_grad(&center)?;
    let mut g_r = problem.moment_bound(&center)?;
    let mut df_max = norm2(&g_center);
    let mut l_r: f64 = 0.0;
    let mut pairs = 0usize;

    let mut visit = |theta: &[f64], g: &[f64], l_r: &mut f64, pairs: &mut usize| -> Result<(), DiagnosticsError> {
        g_r = g_r.max(problem.moment_bound(theta)?);
        df_max = df_max.max(norm2(g));
        let dx = norm2(theta);
        if dx > 0.0 {
            *l_r = l_r.max(holder_ratio(dist2(g, &g_center), dx, alpha));
            *pairs += 1;
        }
        Ok(())
    };

    // grid
    let total = m.pow(p as u32);
    let mut grads: Vec<Option<Vec<f64>>> = vec![None; total];
    let mut theta = vec![0.0; p];
    let mut grid_points = 0;
    for (flat, slot) in grads.iter_mut().enumerate() {
        let mut rest = flat;
        for x in theta.iter_mut() {
            *x = coord(rest % m);
            rest /= m;
        }
        if norm2(&theta) > radius {
            continue;
        }
        let g = problem.mean_grad(&theta)?;
        visit(&theta, &g, &mut l_r, &mut pairs)?;
        *slot = Some(g);
        grid_points += 1;
    }
    let mut stride = 1;
    for _ in 0..p {
        for flat in 0..total {
            if (flat / stride) % m + 1 == m {
                continue;
            }
            if let (Some(a), Some(b)) = (&grads[flat], &grads[flat + stride]) {
                let dx = 2.0 * radius / (m - 1) as f64;
                l_r = l_r.max(holder_ratio(dist2(a, b), dx, alpha));
                pairs += 1;
            }
        }
        stride *= m;
    }

    // refinement
    let mut sampler = BallSampler::new(p, rng);
    let mut refined: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(refine);
    for _ in 0..refine {
        let y = sampler.next_point();
        let theta: Vec<f64> = y.iter().map(|v| radius * v).collect();
        let g = problem.mean_grad(&theta)?;
        visit(&theta, &g, &mut l_r, &mut pairs)?;
        for (t2, g2) in &refined {
            let dx = dist2(&theta, t2);
            if dx > 0.0 {
                l_r = l_r.max(holder_ratio(dist2(&g, g2), dx, alpha));
                pairs += 1;
            }
        }
        refined.push((theta, g));
    }

    Ok(BallBounds {
        radius,
        alpha,
        l_r,
        g_r,
        df_r: (1.0 + alpha) * df_max,
        grid_density: m,
        grid_points,
        refinement_points: refine,
        pairs,
    })
}
