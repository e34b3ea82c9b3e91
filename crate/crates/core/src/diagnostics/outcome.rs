//! Finite-horizon classification of a trajectory as converging, diverging,
//! or undecided.

use serde::Serialize;

use crate::diagnostics::DiagnosticsError;
use crate::engine::Trajectory;
use crate::{dist2, norm2};

const MIN_RECORDS: usize = 10;
/// Above this many window points the diameter is bounded instead of computed
/// exactly.
const EXACT_DIAMETER_LIMIT: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyConfig {
    pub window_frac: f64,
    /// `None` selects `10⁻³ (1 + ‖θ_K‖)`.
    pub cauchy_tol: Option<f64>,
    pub norm_floor: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            window_frac: 0.5,
            cauchy_tol: None,
            norm_floor: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum OutcomeVerdict {
    Converged { point: Vec<f64>, terminal_f: f64 },
    Diverging,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    pub window_frac: f64,
    pub cauchy_tol: f64,
    pub norm_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeClassification {
    #[serde(flatten)]
    pub verdict: OutcomeVerdict,
    /// First and last `k` of the examined window.
    pub window: (u64, u64),
    pub window_len: usize,
    pub thresholds: Thresholds,
    /// Max pairwise distance in the window (an upper bound when the window is
    /// large).
    pub diameter: f64,
    pub diameter_exact: bool,
    pub min_norm: f64,
    /// Least-squares slope of `‖θ_k‖` against `k` over the window.
    pub norm_slope: f64,
}

impl OutcomeClassification {
    pub fn is_converged(&self) -> bool {
        matches!(self.verdict, OutcomeVerdict::Converged { .. })
    }
}

/// Classify the finite records of a trajectory.
pub fn classify_outcome(traj: &Trajectory, cfg: &ClassifyConfig) -> Result<OutcomeClassification, DiagnosticsError> {
    let points: Vec<(u64, &[f64], f64)> = traj
        .records
        .iter()
        .filter(|r| r.theta.iter().all(|x| x.is_finite()))
        .map(|r| (r.k, r.theta.as_slice(), r.f))
        .collect();
    classify_points(&points, cfg)
}

/// Classify `(k, θ_k, F(θ_k))` triples in increasing `k`.
pub fn classify_points(
    points: &[(u64, &[f64], f64)],
    cfg: &ClassifyConfig,
) -> Result<OutcomeClassification, DiagnosticsError> {
    if !(cfg.window_frac > 0.0 && cfg.window_frac <= 1.0) {
        return Err(DiagnosticsError::InvalidWindow(cfg.window_frac));
    }
    if !(cfg.norm_floor.is_finite() && cfg.norm_floor > 0.0) {
        return Err(DiagnosticsError::InvalidThreshold {
            name: "norm_floor",
            value: cfg.norm_floor,
        });
    }
    if let Some(tol) = cfg.cauchy_tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(DiagnosticsError::InvalidThreshold {
                name: "cauchy_tol",
                value: tol,
            });
        }
    }
    let n = points.len();
    if n < MIN_RECORDS {
        return Err(DiagnosticsError::TooFewRecords {
            got: n,
            need: MIN_RECORDS,
        });
    }
    let w = ((cfg.window_frac * n as f64).ceil() as usize).clamp(2, n);
    let window = &points[n - w..];
    let (_, last, terminal_f) = window[w - 1];
    let cauchy_tol = cfg.cauchy_tol.unwrap_or(1e-3 * (1.0 + norm2(last)));

    let (diameter, diameter_exact) = diameter(window);
    let norms: Vec<f64> = window.iter().map(|(_, t, _)| norm2(t)).collect();
    let min_norm = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let norm_slope = slope(window.iter().map(|(k, _, _)| *k as f64).zip(norms.iter().copied()));

    let verdict = if diameter < cauchy_tol {
        let p = last.len();
        let mut point = vec![0.0; p];
        for (_, t, _) in window {
            for i in 0..p {
                point[i] += t[i];
            }
        }
        point.iter_mut().for_each(|x| *x /= w as f64);
        OutcomeVerdict::Converged { point, terminal_f }
    } else if min_norm > cfg.norm_floor && norm_slope > 0.0 && norms[w - 1] > norms[0] {
        OutcomeVerdict::Diverging
    } else {
        OutcomeVerdict::Undecided
    };
    Ok(OutcomeClassification {
        verdict,
        window: (window[0].0, window[w - 1].0),
        window_len: w,
        thresholds: Thresholds {
            window_frac: cfg.window_frac,
            cauchy_tol,
            norm_floor: cfg.norm_floor,
        },
        diameter,
        diameter_exact,
        min_norm,
        norm_slope,
    })
}

fn diameter(window: &[(u64, &[f64], f64)]) -> (f64, bool) {
    let w = window.len();
    if w <= EXACT_DIAMETER_LIMIT {
        let mut d: f64 = 0.0;
        for i in 0..w {
            for j in (i + 1)..w {
                d = d.max(dist2(window[i].1, window[j].1));
            }
        }
        return (d, true);
    }
    let p = window[0].1.len();
    let mut centroid = vec![0.0; p];
    let mut lo = vec![f64::INFINITY; p];
    let mut hi = vec![f64::NEG_INFINITY; p];
    for (_, t, _) in window {
        for i in 0..p {
            centroid[i] += t[i] / w as f64;
            lo[i] = lo[i].min(t[i]);
            hi[i] = hi[i].max(t[i]);
        }
    }
    let radius = window.iter().map(|(_, t, _)| dist2(t, &centroid)).fold(0.0, f64::max);
    (f64::min(2.0 * radius, dist2(&lo, &hi)), false)
}

fn slope(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let n = pairs.clone().count() as f64;
    let (sx, sy) = pairs.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pairs.fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
