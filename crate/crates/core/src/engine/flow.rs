//! Classical fourth-order Runge–Kutta integration of `dθ/dt = −Ḟ(θ)`.

use serde::Serialize;

use crate::engine::EngineError;
use crate::problems::Problem;
use crate::{dist2, norm2};

/// States with a larger norm are declared a blow-up.
pub const BLOW_UP_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowPoint {
    pub t: f64,
    pub theta: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub theta_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum FlowStatus {
    Completed,
    BlowUp { t: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTrajectory {
    pub problem: String,
    pub h: f64,
    pub horizon: f64,
    pub method: &'static str,
    pub order: u32,
    pub points: Vec<FlowPoint>,
    pub status: FlowStatus,
}

impl FlowTrajectory {
    pub fn last(&self) -> &FlowPoint {
        self.points.last().expect("flow trajectories hold the initial point")
    }
}

fn point(problem: &Problem, t: f64, theta: &[f64]) -> FlowPoint {
    FlowPoint {
        t,
        theta: theta.to_vec(),
        f: problem.mean_loss(theta).unwrap_or(f64::INFINITY),
        grad_norm: problem.mean_grad(theta).map_or(f64::INFINITY, |g| norm2(&g)),
        theta_norm: norm2(theta),
    }
}

/// Integrate over `[0, T]` with step `h` (the last step is shortened to land
/// on `T`), keeping every grid point.
pub fn run_flow(problem: &Problem, theta0: &[f64], horizon: f64, h: f64) -> Result<FlowTrajectory, EngineError> {
    run_flow_strided(problem, theta0, horizon, h, 1)
}

/// As [`run_flow`] but keeps only every `stride`-th grid point (plus the
/// endpoint).
pub fn run_flow_strided(
    problem: &Problem,
    theta0: &[f64],
    horizon: f64,
    h: f64,
    stride: u64,
) -> Result<FlowTrajectory, EngineError> {
    problem.check_theta(theta0)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(EngineError::InvalidFlowStep(h));
    }
    if !(horizon.is_finite() && horizon >= h) {
        return Err(EngineError::InvalidHorizon { horizon, h });
    }
    if stride == 0 {
        return Err(EngineError::ZeroStride);
    }
    let n = (horizon / h - 1e-9).ceil() as u64;
    let p = theta0.len();
    let mut theta = theta0.to_vec();
    let mut points = vec![point(problem, 0.0, &theta)];
    let mut k = [vec![0.0; p], vec![0.0; p], vec![0.0; p], vec![0.0; p]];
    let mut stage = vec![0.0; p];
    let mut status = FlowStatus::Completed;
    for i in 0..n {
        let t0 = i as f64 * h;
        let t1 = if i + 1 == n { horizon } else { (i + 1) as f64 * h };
        let dt = t1 - t0;
        match rk4_step(problem, &mut theta, dt, &mut k, &mut stage) {
            Ok(()) if norm2(&theta) <= BLOW_UP_NORM => {}
            Ok(()) => {
                status = FlowStatus::BlowUp {
                    t: t1,
                    reason: format!("state norm exceeded {BLOW_UP_NORM:e}"),
                };
            }
            Err(e) => {
                status = FlowStatus::BlowUp {
                    t: t1,
                    reason: e.to_string(),
                };
            }
        }
        if status != FlowStatus::Completed {
            break;
        }
        if (i + 1) % stride == 0 || i + 1 == n {
            points.push(point(problem, t1, &theta));
        }
    }
    Ok(FlowTrajectory {
        problem: problem.id().to_string(),
        h,
        horizon,
        method: "rk4",
        order: 4,
        points,
        status,
    })
}

fn rk4_step(
    problem: &Problem,
    theta: &mut [f64],
    dt: f64,
    k: &mut [Vec<f64>; 4],
    stage: &mut [f64],
) -> Result<(), crate::problems::ProblemError> {
    let p = theta.len();
    problem.mean_grad_into(theta, &mut k[0])?;
    for (s, c) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
        for i in 0..p {
            stage[i] = theta[i] - c * dt * k[s - 1][i];
        }
        problem.mean_grad_into(stage, &mut k[s])?;
    }
    for i in 0..p {
        theta[i] -= dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
    if theta.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(crate::problems::ProblemError::NonFiniteInput {
            index: theta.iter().position(|x| !x.is_finite()).unwrap_or(0),
        })
    }
}

/// Observed convergence order `log₂(‖y_h − y_{h/2}‖ / ‖y_{h/2} − y_{h/4}‖)`
/// of the endpoint at `T`.
pub fn empirical_order(problem: &Problem, theta0: &[f64], horizon: f64, h: f64) -> Result<f64, EngineError> {
    let end = |step: f64| -> Result<Vec<f64>, EngineError> {
        let traj = run_flow_strided(problem, theta0, horizon, step, u64::MAX)?;
        Ok(traj.last().theta.clone())
    };
    let (a, b, c) = (end(h)?, end(h / 2.0)?, end(h / 4.0)?);
    Ok((dist2(&a, &b) / dist2(&b, &c)).log2())
}
