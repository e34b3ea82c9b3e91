use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sgdlab::diagnostics::{
    classify_outcome, detect_stop_times, ClassifyConfig, DiagnosticsError, OutcomeClassification, OutcomeVerdict,
    StopScan, StopTimes,
};
use sgdlab::engine::{run_sgd, RunStatus, Trajectory};

use super::emit;
use crate::config::{RunConfig, RunSetup};
use crate::output::{report_json, trajectory_csv, write_file};
use crate::{CliError, RunArgs};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    /// CSV file name inside the output directory.
    pub csv: Option<String>,
    pub status: RunStatus,
    pub steps: u64,
    pub records: usize,
    /// Last finite iterate and its objective values.
    pub final_theta: Vec<f64>,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub distance_to_optimum: Option<f64>,
    /// `None` when the run kept too few records to classify.
    pub classification: Option<OutcomeClassification>,
    pub stop_times: Option<StopTimes>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub runs: usize,
    pub completed: usize,
    pub converged: usize,
    pub diverging: usize,
    pub undecided: usize,
    pub median_distance_to_optimum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub config: BTreeMap<String, String>,
    pub problem: String,
    pub dim: usize,
    pub alpha: f64,
    pub schedule: String,
    pub seeds: Vec<SeedSummary>,
    pub aggregate: Aggregate,
}

/// One seed of a run: the trajectory plus its diagnostics.
pub fn run_seed(cfg: &RunConfig, setup: &RunSetup, seed: u64) -> Result<(Trajectory, SeedSummary), CliError> {
    let mut traj = run_sgd(
        &setup.problem,
        &setup.schedule,
        &setup.theta0,
        seed,
        cfg.steps,
        cfg.stride,
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let classify = ClassifyConfig {
        window_frac: cfg.window_frac,
        cauchy_tol: cfg.cauchy_tol,
        norm_floor: cfg.norm_floor,
    };
    let classification = match classify_outcome(&traj, &classify) {
        Ok(c) => Some(c),
        Err(DiagnosticsError::TooFewRecords { .. }) => None,
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let stop_times = if cfg.stop_times {
        let scan = StopScan {
            alpha: setup.alpha,
            epsilon: cfg.epsilon,
            j: cfg.j,
            n_samples: cfg.samples,
            seed,
        };
        let st = detect_stop_times(&setup.problem, &traj, &scan).map_err(|e| CliError::Numerical(e.to_string()))?;
        traj.events.j = Some(st.j);
        traj.events.tau = st.tau;
        traj.events.nu = st.nu;
        Some(st)
    } else {
        None
    };
    let last = traj
        .records
        .iter()
        .rev()
        .find(|r| r.theta.iter().all(|x| x.is_finite()))
        .expect("the initial record is finite");
    let summary = SeedSummary {
        seed,
        csv: cfg.write_csv.then(|| cfg.csv_name(seed)),
        status: traj.status.clone(),
        steps: traj.steps,
        records: traj.records.len(),
        final_theta: traj.final_theta.clone(),
        final_f: last.f,
        final_grad_norm: last.grad_norm,
        distance_to_optimum: setup.distance_to_optimum(&traj),
        classification,
        stop_times,
    };
    Ok((traj, summary))
}

fn aggregate(seeds: &[SeedSummary]) -> Aggregate {
    let count = |f: fn(&OutcomeVerdict) -> bool| {
        seeds
            .iter()
            .filter(|s| s.classification.as_ref().is_some_and(|c| f(&c.verdict)))
            .count()
    };
    let mut d: Vec<f64> = seeds
        .iter()
        .filter_map(|s| s.distance_to_optimum)
        .filter(|x| x.is_finite())
        .collect();
    d.sort_by(f64::total_cmp);
    let median = match d.len() {
        0 => None,
        n if n % 2 == 1 => Some(d[n / 2]),
        n => Some(0.5 * (d[n / 2 - 1] + d[n / 2])),
    };
    Aggregate {
        runs: seeds.len(),
        completed: seeds.iter().filter(|s| s.status == RunStatus::Completed).count(),
        converged: count(|v| matches!(v, OutcomeVerdict::Converged { .. })),
        diverging: count(|v| matches!(v, OutcomeVerdict::Diverging)),
        undecided: count(|v| matches!(v, OutcomeVerdict::Undecided)),
        median_distance_to_optimum: median,
    }
}

/// Run every seed of `cfg`, writing per-seed CSVs and the summary into `dir`.
/// Seeds run in parallel; the summary lists them in seed order.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let setup = cfg.build()?;
    let seeds: Vec<u64> = cfg.seeds().collect();
    let summaries = seeds
        .par_iter()
        .map(|&seed| {
            let (traj, summary) = run_seed(cfg, &setup, seed)?;
            if cfg.write_csv {
                let path = dir.join(cfg.csv_name(seed));
                write_file(&path, &trajectory_csv(&traj))
                    .map_err(CliError::io(format!("writing {}", path.display())))?;
            }
            Ok(summary)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let summary = RunSummary {
        config: cfg.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        problem: setup.problem.id().to_string(),
        dim: setup.problem.dim(),
        alpha: setup.alpha,
        schedule: setup.schedule.describe(),
        aggregate: aggregate(&summaries),
        seeds: summaries,
    };
    if cfg.write_summary {
        let path = dir.join(cfg.summary_name());
        write_file(&path, report_json("run", &summary).as_bytes())
            .map_err(CliError::io(format!("writing {}", path.display())))?;
    }
    Ok(summary)
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&args.overrides)?;
    if let Some(dir) = &args.out {
        cfg.out_dir = Some(dir.clone());
    }
    if args.print_config {
        return emit(out, &cfg.to_text());
    }
    let dir = cfg.resolved_out_dir();
    let summary = execute(&cfg, &dir)?;
    emit(out, &report_json("run", &summary))?;
    let failed: Vec<String> = summary
        .seeds
        .iter()
        .filter_map(|s| match &s.status {
            RunStatus::NonFinite { step, reason } => Some(format!("seed {} stopped at step {step}: {reason}", s.seed)),
            RunStatus::Completed => None,
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(failed.join("; ")))
    }
}
