use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use sgdlab::engine::{run_flow_strided, run_gd_observed, FlowStatus, RunStatus, ScalarSteps};
use sgdlab::make_problem;

use super::emit;
use crate::config::{DEFAULT_OUT_DIR, OUT_DIR_ENV};
use crate::output::{flow_csv, report_json, trajectory_csv, write_file};
use crate::plot::phase_plane_svg;
use crate::{CliError, LimitCycleArgs};

/// Pass/fail thresholds reported alongside the measurements.
pub const WINDING_THRESHOLD: f64 = 2.0 * PI;
pub const RADIUS_GAP_THRESHOLD: f64 = 1e-2;
pub const OSCILLATION_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSummary {
    pub status: FlowStatus,
    pub final_t: f64,
    pub final_theta: Vec<f64>,
    /// `θ₂(T) − θ₂(0)`.
    pub winding: f64,
    /// `|θ₁(T) − 1|`.
    pub radius_gap: f64,
    pub winds: bool,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GdSummary {
    pub status: RunStatus,
    pub steps: u64,
    pub final_theta: Vec<f64>,
    /// `θ₂_K − θ₂_0`.
    pub winding: f64,
    /// `max − min` of `θ₂_k` over `k ≥ K/2`, taken over every iterate.
    pub final_half_angle_oscillation: f64,
    /// `max − min` of `θ₁_k` over `k ≥ K/2`.
    pub final_half_radius_oscillation: f64,
    pub settles: bool,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    pub winding: f64,
    pub radius_gap: f64,
    pub oscillation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycleReport {
    pub theta0: Vec<f64>,
    pub horizon: f64,
    pub h: f64,
    pub step_rule: String,
    pub flow: FlowSummary,
    pub gd: GdSummary,
    pub thresholds: Thresholds,
    pub plot: Option<String>,
    pub plot_warning: Option<String>,
}

#[derive(Default)]
struct Range {
    lo: f64,
    hi: f64,
    seen: bool,
}

impl Range {
    fn push(&mut self, x: f64) {
        if !self.seen {
            (self.lo, self.hi, self.seen) = (x, x, true);
        } else {
            self.lo = self.lo.min(x);
            self.hi = self.hi.max(x);
        }
    }

    fn width(&self) -> f64 {
        if self.seen {
            self.hi - self.lo
        } else {
            0.0
        }
    }
}

/// Flow and GD from the same start; writes `flow.csv`, `gd.csv`,
/// `limit_cycle.json` and `limit_cycle.svg`.
pub fn compare(args: &LimitCycleArgs, dir: &std::path::Path) -> Result<LimitCycleReport, CliError> {
    let problem = make_problem("limit-cycle").expect("catalog id");
    let theta0 = &args.theta0.0;
    problem
        .check_theta(theta0)
        .map_err(|e| CliError::Usage(format!("--theta0: {e}")))?;
    if args.stride == 0 || args.flow_stride == 0 {
        return Err(CliError::Usage("strides must be at least 1".into()));
    }
    let flow = run_flow_strided(&problem, theta0, args.horizon, args.h, args.flow_stride)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let k = args.steps;
    let (mut angle, mut radius) = (Range::default(), Range::default());
    let gd = run_gd_observed(
        &problem,
        &ScalarSteps::Power { c: 1.0, beta: 1.0 },
        theta0,
        k,
        args.stride,
        &mut |i, th| {
            if i >= k / 2 {
                radius.push(th[0]);
                angle.push(th[1]);
            }
        },
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;

    write_file(&dir.join("flow.csv"), &flow_csv(&flow)).map_err(CliError::io("writing flow.csv"))?;
    write_file(&dir.join("gd.csv"), &trajectory_csv(&gd)).map_err(CliError::io("writing gd.csv"))?;

    let end = flow.last();
    let flow_winding = end.theta[1] - theta0[1];
    let radius_gap = (end.theta[0] - 1.0).abs();
    let osc = angle.width();
    let svg = dir.join("limit_cycle.svg");
    let flow_pts: Vec<Vec<f64>> = flow.points.iter().map(|p| p.theta.clone()).collect();
    let gd_pts: Vec<Vec<f64>> = gd.records.iter().map(|r| r.theta.clone()).collect();
    let (plot, plot_warning) = match phase_plane_svg(&svg, &flow_pts, &gd_pts) {
        Ok(()) => (Some("limit_cycle.svg".to_string()), None),
        Err(e) => (None, Some(e)),
    };
    let report = LimitCycleReport {
        theta0: theta0.clone(),
        horizon: args.horizon,
        h: args.h,
        step_rule: "alpha_k = 1/(k+1)".into(),
        flow: FlowSummary {
            status: flow.status.clone(),
            final_t: end.t,
            final_theta: end.theta.clone(),
            winding: flow_winding,
            radius_gap,
            winds: flow_winding.abs() > WINDING_THRESHOLD && radius_gap < RADIUS_GAP_THRESHOLD,
            csv: "flow.csv".into(),
        },
        gd: GdSummary {
            status: gd.status.clone(),
            steps: k,
            final_theta: gd.final_theta.clone(),
            winding: gd.final_theta[1] - theta0[1],
            final_half_angle_oscillation: osc,
            final_half_radius_oscillation: radius.width(),
            settles: gd.is_completed() && osc < OSCILLATION_THRESHOLD,
            csv: "gd.csv".into(),
        },
        thresholds: Thresholds {
            winding: WINDING_THRESHOLD,
            radius_gap: RADIUS_GAP_THRESHOLD,
            oscillation: OSCILLATION_THRESHOLD,
        },
        plot,
        plot_warning,
    };
    write_file(
        &dir.join("limit_cycle.json"),
        report_json("limit-cycle", &report).as_bytes(),
    )
    .map_err(CliError::io("writing limit_cycle.json"))?;
    Ok(report)
}

pub fn cmd_limit_cycle(args: &LimitCycleArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from));
    let report = compare(args, &dir)?;
    if let Some(w) = &report.plot_warning {
        let _ = writeln!(err, "warning: plot skipped: {w}");
    }
    emit(out, &report_json("limit-cycle", &report))?;
    let mut failures = Vec::new();
    if let FlowStatus::BlowUp { t, reason } = &report.flow.status {
        failures.push(format!("flow blew up at t = {t}: {reason}"));
    }
    if let RunStatus::NonFinite { step, reason } = &report.gd.status {
        failures.push(format!("gradient descent stopped at step {step}: {reason}"));
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(failures.join("; ")))
    }
}
