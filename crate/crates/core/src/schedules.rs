//! Matrix step-size sequences `{M_k}` and their admissibility analysis.
//!
//! A schedule is admissible when every `M_k` is symmetric positive definite
//! (P1), `Σ λ_max(M_k)^{1+α} < ∞` (P2), `Σ λ_min(M_k) = ∞` (P3) and
//! `λ_max(M_k)^α κ(M_k) → 0` (P4). For the power family
//! `M_k = diag(c (k+1)^{-β_i})` all four reduce to p-series tests; arbitrary
//! sequences only get partial sums and an "inconclusive" verdict.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::special::hurwitz_zeta;

/// Default number of terms for partial-sum diagnostics.
pub const DEFAULT_HORIZON: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("step coefficient c must be finite and positive, got {0}")]
    InvalidCoefficient(f64),
    #[error("exponent beta[{index}] = {value} must lie in (0, 1]")]
    InvalidExponent { index: usize, value: f64 },
    #[error("schedule needs at least one exponent")]
    NoExponents,
    #[error("expected {expected} exponents for dimension {expected}, got {got}")]
    ExponentCount { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (|M[{i},{j}] - M[{j},{i}]| = {gap:e})")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("step matrix {index} has dimension {got}, schedule has dimension {expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("custom schedule is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One step matrix `M_k` in the cheapest faithful representation.
#[derive(Debug, Clone, PartialEq)]
pub enum StepMatrix {
    Scalar { value: f64, dim: usize },
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl StepMatrix {
    pub fn dim(&self) -> usize {
        match self {
            StepMatrix::Scalar { dim, .. } => *dim,
            StepMatrix::Diagonal(d) => d.len(),
            StepMatrix::Dense(m) => m.nrows(),
        }
    }

    /// `out = M g`.
    pub fn apply(&self, g: &[f64], out: &mut [f64]) {
        match self {
            StepMatrix::Scalar { value, .. } => {
                for (o, x) in out.iter_mut().zip(g) {
                    *o = value * x;
                }
            }
            StepMatrix::Diagonal(d) => {
                for ((o, x), m) in out.iter_mut().zip(g).zip(d) {
                    *o = m * x;
                }
            }
            StepMatrix::Dense(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..g.len()).map(|j| m[(i, j)] * g[j]).sum();
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            StepMatrix::Scalar { value, dim } => DMatrix::identity(*dim, *dim) * *value,
            StepMatrix::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            StepMatrix::Dense(m) => m.clone(),
        }
    }

    /// `(λ_min, λ_max, κ)`.
    pub fn extremes(&self) -> Result<(f64, f64, f64), ScheduleError> {
        match self {
            StepMatrix::Scalar { value, .. } => diagonal_extremes(std::slice::from_ref(value)),
            StepMatrix::Diagonal(d) => diagonal_extremes(d),
            StepMatrix::Dense(m) => eigen_extremes(m),
        }
    }
}

fn diagonal_extremes(d: &[f64]) -> Result<(f64, f64, f64), ScheduleError> {
    let lmin = d.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lmin.is_nan() || lmin <= 0.0 {
        return Err(ScheduleError::NotPositiveDefinite(lmin));
    }
    Ok((lmin, lmax, lmax / lmin))
}

/// Extreme eigenvalues and condition number of a symmetric positive-definite
/// matrix. Diagonal input is read off exactly.
pub fn eigen_extremes(m: &DMatrix<f64>) -> Result<(f64, f64, f64), ScheduleError> {
    let (rows, cols) = m.shape();
    if rows != cols || rows == 0 {
        return Err(ScheduleError::NotSquare { rows, cols });
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut diagonal = true;
    for i in 0..rows {
        for j in (i + 1)..cols {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > 1e-12 * scale || !gap.is_finite() {
                return Err(ScheduleError::NotSymmetric { i, j, gap });
            }
            if m[(i, j)] != 0.0 || m[(j, i)] != 0.0 {
                diagonal = false;
            }
        }
    }
    if diagonal {
        let d: Vec<f64> = (0..rows).map(|i| m[(i, i)]).collect();
        return diagonal_extremes(&d);
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig =
        SymmetricEigen::try_new(sym, 1e-15 * scale, 10_000).ok_or(ScheduleError::NotPositiveDefinite(f64::NAN))?;
    diagonal_extremes(eig.eigenvalues.as_slice())
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Power { c: f64, betas: Vec<f64> },
    Custom(Vec<StepMatrix>),
}

/// A deterministic sequence of step matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    dim: usize,
    kind: Kind,
}

/// `M_k = diag(c (k+1)^{-β_i})`. Pass one exponent for the scalar case or
/// `dim` exponents for a diagonal schedule.
pub fn power_schedule(c: f64, betas: &[f64], dim: usize) -> Result<StepSchedule, ScheduleError> {
    if !(c.is_finite() && c > 0.0) {
        return Err(ScheduleError::InvalidCoefficient(c));
    }
    if betas.is_empty() {
        return Err(ScheduleError::NoExponents);
    }
    if betas.len() != 1 && betas.len() != dim {
        return Err(ScheduleError::ExponentCount {
            expected: dim,
            got: betas.len(),
        });
    }
    for (index, &value) in betas.iter().enumerate() {
        if !(value > 0.0 && value <= 1.0) {
            return Err(ScheduleError::InvalidExponent { index, value });
        }
    }
    let betas = if betas.iter().all(|b| *b == betas[0]) {
        vec![betas[0]]
    } else {
        betas.to_vec()
    };
    Ok(StepSchedule {
        dim,
        kind: Kind::Power { c, betas },
    })
}

impl StepSchedule {
    /// A finite user-supplied sequence `M_0, …, M_{n−1}`; each matrix must be
    /// symmetric positive definite.
    pub fn custom(dim: usize, matrices: Vec<StepMatrix>) -> Result<Self, ScheduleError> {
        if matrices.is_empty() {
            return Err(ScheduleError::Empty);
        }
        for (index, m) in matrices.iter().enumerate() {
            if m.dim() != dim {
                return Err(ScheduleError::DimensionMismatch {
                    index,
                    expected: dim,
                    got: m.dim(),
                });
            }
            m.extremes()?;
        }
        Ok(Self {
            dim,
            kind: Kind::Custom(matrices),
        })
    }

    /// Parse a custom sequence: one matrix per non-empty line, given as a
    /// single scalar, `dim` diagonal entries, or `dim²` row-major entries.
    /// `#` starts a comment.
    pub fn parse_custom(dim: usize, text: &str) -> Result<Self, ScheduleError> {
        let mut matrices = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let values = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>().map_err(|e| ScheduleError::Parse {
                        line: i + 1,
                        message: format!("`{t}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let m = match values.len() {
                1 => StepMatrix::Scalar { value: values[0], dim },
                n if n == dim => StepMatrix::Diagonal(values),
                n if n == dim * dim => StepMatrix::Dense(DMatrix::from_row_slice(dim, dim, &values)),
                n => {
                    return Err(ScheduleError::Parse {
                        line: i + 1,
                        message: format!("expected 1, {dim} or {} numbers, got {n}", dim * dim),
                    })
                }
            };
            m.extremes().map_err(|e| ScheduleError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            matrices.push(m);
        }
        Self::custom(dim, matrices)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_power(&self) -> bool {
        matches!(self.kind, Kind::Power { .. })
    }

    /// Number of available matrices (`None` for infinite generators).
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Option<usize> {
        match &self.kind {
            Kind::Power { .. } => None,
            Kind::Custom(ms) => Some(ms.len()),
        }
    }

    /// `"scalar-power"`, `"diagonal-power"` or `"custom-sequence"`.
    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            Kind::Power { betas, .. } if betas.len() == 1 => "scalar-power",
            Kind::Power { .. } => "diagonal-power",
            Kind::Custom(_) => "custom-sequence",
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Power { c, betas } => format!("{}(c={c}, beta={betas:?})", self.kind_name()),
            Kind::Custom(ms) => format!("custom-sequence(len={})", ms.len()),
        }
    }

    /// Power-family parameters `(c, β)`, with β expanded to one entry per
    /// coordinate.
    pub fn power_params(&self) -> Option<(f64, Vec<f64>)> {
        match &self.kind {
            Kind::Power { c, betas } if betas.len() == 1 => Some((*c, vec![betas[0]; self.dim])),
            Kind::Power { c, betas } => Some((*c, betas.clone())),
            Kind::Custom(_) => None,
        }
    }

    /// `M_k`, or `None` past the end of a finite sequence.
    pub fn matrix(&self, k: u64) -> Option<StepMatrix> {
        match &self.kind {
            Kind::Power { c, betas } => {
                let base = (k + 1) as f64;
                Some(if betas.len() == 1 {
                    StepMatrix::Scalar {
                        value: c * base.powf(-betas[0]),
                        dim: self.dim,
                    }
                } else {
                    StepMatrix::Diagonal(betas.iter().map(|b| c * base.powf(-b)).collect())
                })
            }
            Kind::Custom(ms) => ms.get(k as usize).cloned(),
        }
    }

    /// `(λ_min(M_k), λ_max(M_k))`, or `None` past the end.
    pub fn extremes(&self, k: u64) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Power { c, betas } => {
                let base = (k + 1) as f64;
                let bmin = betas.iter().copied().fold(f64::INFINITY, f64::min);
                let bmax = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Some((c * base.powf(-bmax), c * base.powf(-bmin)))
            }
            Kind::Custom(ms) => ms.get(k as usize).map(|m| {
                m.extremes()
                    .map(|(lo, hi, _)| (lo, hi))
                    .expect("validated at construction")
            }),
        }
    }

    /// `Σ_{k ≥ from} λ_max(M_k)^{1+α}` in closed form for the power family
    /// (infinite when the series diverges); `None` for custom sequences.
    pub fn lmax_power_tail(&self, alpha: f64, from: u64) -> Option<f64> {
        let (c, betas) = self.power_params()?;
        let bmin = betas.iter().copied().fold(f64::INFINITY, f64::min);
        let s = bmin * (1.0 + alpha);
        Some(if s > 1.0 {
            c.powf(1.0 + alpha) * hurwitz_zeta(s, from as f64 + 1.0)
        } else {
            f64::INFINITY
        })
    }
}

/// Tri-state outcome of a property check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSums {
    pub horizon: u64,
    /// `Σ_{k<horizon} λ_max(M_k)^{1+α}`
    pub lmax_power_sum: f64,
    /// `Σ_{k<horizon} λ_min(M_k)`
    pub lmin_sum: f64,
    /// `λ_max^α κ` at the last term
    pub last_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleEvidence {
    pub p1: String,
    pub p2: String,
    pub p3: String,
    pub p4: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub kind: String,
    pub dim: usize,
    pub alpha: f64,
    pub p1: Verdict,
    pub p2: Verdict,
    pub p3: Verdict,
    pub p4: Verdict,
    /// `S = Σ λ_max(M_k)^{1+α}`: exact for the power family when finite,
    /// the partial sum for custom sequences, `None` when divergent.
    pub s_value: Option<f64>,
    pub partial_sums: Option<PartialSums>,
    pub evidence: ScheduleEvidence,
}

impl ScheduleReport {
    pub fn admissible(&self) -> bool {
        [self.p1, self.p2, self.p3, self.p4]
            .iter()
            .all(|v| *v == Verdict::Holds)
    }
}

/// Partial sums over the first `horizon` matrices (or the whole finite
/// sequence if shorter).
pub fn partial_sums(s: &StepSchedule, alpha: f64, horizon: u64) -> PartialSums {
    let n = s.len().map_or(horizon, |l| horizon.min(l as u64));
    let mut lmax_power_sum = 0.0;
    let mut lmin_sum = 0.0;
    let mut last_ratio = f64::NAN;
    for k in 0..n {
        let (lo, hi) = s.extremes(k).expect("k within length");
        lmax_power_sum += hi.powf(1.0 + alpha);
        lmin_sum += lo;
        last_ratio = hi.powf(alpha) * hi / lo;
    }
    PartialSums {
        horizon: n,
        lmax_power_sum,
        lmin_sum,
        last_ratio,
    }
}

/// Classify a schedule against the four admissibility properties.
pub fn classify_schedule(s: &StepSchedule, alpha: f64) -> ScheduleReport {
    classify_schedule_with_horizon(s, alpha, DEFAULT_HORIZON)
}

pub fn classify_schedule_with_horizon(s: &StepSchedule, alpha: f64, horizon: u64) -> ScheduleReport {
    match s.power_params() {
        Some((c, betas)) => classify_power(s, c, &betas, alpha),
        None => classify_custom(s, alpha, horizon),
    }
}

fn classify_power(s: &StepSchedule, c: f64, betas: &[f64], alpha: f64) -> ScheduleReport {
    let bmin = betas.iter().copied().fold(f64::INFINITY, f64::min);
    let bmax = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p2 = bmin * (1.0 + alpha) > 1.0;
    let p3 = bmax <= 1.0;
    let p4 = alpha * bmin > bmax - bmin;
    let s_value = s.lmax_power_tail(alpha, 0).filter(|v| v.is_finite());
    let evidence = ScheduleEvidence {
        p1: format!("diagonal entries c (k+1)^(-beta_i) > 0 with c = {c}"),
        p2: format!(
            "sum of (k+1)^(-{:.6}) {} (beta_min (1+alpha) {} 1)",
            bmin * (1.0 + alpha),
            if p2 { "converges" } else { "diverges" },
            if p2 { ">" } else { "<=" }
        ),
        p3: format!(
            "sum of (k+1)^(-{bmax}) {} (beta_max {} 1)",
            if p3 { "diverges" } else { "converges" },
            if p3 { "<=" } else { ">" }
        ),
        p4: format!(
            "lambda_max^alpha kappa ~ (k+1)^({:.6}) {}",
            (bmax - bmin) - alpha * bmin,
            if p4 { "-> 0" } else { "does not vanish" }
        ),
    };
    ScheduleReport {
        kind: s.kind_name().to_string(),
        dim: s.dim(),
        alpha,
        p1: Verdict::Holds,
        p2: Verdict::from_bool(p2),
        p3: Verdict::from_bool(p3),
        p4: Verdict::from_bool(p4),
        s_value,
        partial_sums: None,
        evidence,
    }
}

fn classify_custom(s: &StepSchedule, alpha: f64, horizon: u64) -> ScheduleReport {
    let sums = partial_sums(s, alpha, horizon);
    let evidence = ScheduleEvidence {
        p1: format!("all {} matrices are symmetric positive definite", sums.horizon),
        p2: format!(
            "partial sum over {} terms = {:e}; a finite sequence cannot decide an infinite series",
            sums.horizon, sums.lmax_power_sum
        ),
        p3: format!("partial sum over {} terms = {:e}", sums.horizon, sums.lmin_sum),
        p4: format!("lambda_max^alpha kappa at the last term = {:e}", sums.last_ratio),
    };
    ScheduleReport {
        kind: s.kind_name().to_string(),
        dim: s.dim(),
        alpha,
        p1: Verdict::Holds,
        p2: Verdict::Inconclusive,
        p3: Verdict::Inconclusive,
        p4: Verdict::Inconclusive,
        s_value: Some(sums.lmax_power_sum),
        partial_sums: Some(sums),
        evidence,
    }
}
