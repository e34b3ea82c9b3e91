//! Run configuration and its flat `section.key = value` text format.
//!
//! Lines are trimmed; blank lines and everything after `#` are ignored.
//! Every key may appear at most once, unknown keys are rejected, and
//! `--set key=value` overrides are applied after the file.

use std::fmt;
use std::path::{Path, PathBuf};

use sgdlab::engine::Trajectory;
use sgdlab::problems::make_linreg;
use sgdlab::{make_problem, power_schedule, Problem, StepSchedule};
use thiserror::Error;

/// Default output directory when neither `output.dir` nor `--out` is given.
pub const OUT_DIR_ENV: &str = "SGDLAB_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "sgdlab-out";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag(String),
    Field(&'static str),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag(key) => write!(f, "--set {key}"),
            Origin::Field(key) => write!(f, "field `{key}`"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{origin}: {message}")]
pub struct ConfigError {
    pub origin: Origin,
    pub message: String,
}

impl ConfigError {
    fn field(key: &'static str, message: impl Into<String>) -> Self {
        Self {
            origin: Origin::Field(key),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Power,
    Custom,
}

/// Everything `run` needs. [`RunConfig::default`] documents the defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    /// Optimum of `linreg`; ignored by the other problems.
    pub theta_star: f64,
    pub schedule_kind: ScheduleKind,
    pub c: f64,
    /// One exponent (scalar schedule) or one per coordinate.
    pub beta: Vec<f64>,
    pub schedule_file: Option<PathBuf>,
    /// `None` starts at the origin.
    pub theta0: Option<Vec<f64>>,
    pub seed: u64,
    /// Number of consecutive seeds starting at `seed`.
    pub sweep: u64,
    pub steps: u64,
    pub stride: u64,
    /// `None` falls back to `$SGDLAB_OUT_DIR`, then `sgdlab-out`.
    pub out_dir: Option<PathBuf>,
    pub prefix: String,
    pub write_csv: bool,
    pub write_summary: bool,
    pub stop_times: bool,
    pub j: u64,
    /// `None` uses the problem's Hölder exponent.
    pub alpha: Option<f64>,
    pub epsilon: f64,
    pub samples: usize,
    pub window_frac: f64,
    /// `None` is `auto`: `10⁻³ (1 + ‖θ_K‖)`.
    pub cauchy_tol: Option<f64>,
    pub norm_floor: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "linreg".into(),
            theta_star: 1.0,
            schedule_kind: ScheduleKind::Power,
            c: 1.0,
            beta: vec![0.7],
            schedule_file: None,
            theta0: None,
            seed: 0,
            sweep: 1,
            steps: 1000,
            stride: 1,
            out_dir: None,
            prefix: "run".into(),
            write_csv: true,
            write_summary: true,
            stop_times: false,
            j: 0,
            alpha: None,
            epsilon: 1e-3,
            samples: 32,
            window_frac: 0.5,
            cauchy_tol: None,
            norm_floor: 1e6,
        }
    }
}

/// All recognised keys in canonical order.
pub const KEYS: [&str; 23] = [
    "problem.id",
    "problem.theta_star",
    "schedule.kind",
    "schedule.c",
    "schedule.beta",
    "schedule.file",
    "run.theta0",
    "run.seed",
    "run.sweep",
    "run.steps",
    "run.stride",
    "output.dir",
    "output.prefix",
    "output.csv",
    "output.summary",
    "diagnostics.stop_times",
    "diagnostics.j",
    "diagnostics.alpha",
    "diagnostics.epsilon",
    "diagnostics.samples",
    "classify.window_frac",
    "classify.cauchy_tol",
    "classify.norm_floor",
];

fn parse_f64(v: &str) -> Result<f64, String> {
    v.parse::<f64>().map_err(|e| format!("`{v}` is not a number ({e})"))
}

fn parse_u64(v: &str) -> Result<u64, String> {
    v.parse::<u64>()
        .map_err(|e| format!("`{v}` is not a non-negative integer ({e})"))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("`{v}` is not `true` or `false`")),
    }
}

pub fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    let items: Vec<&str> = v.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(format!("`{v}` is not a comma-separated list of numbers"));
    }
    items.into_iter().map(parse_f64).collect()
}

fn auto_or_f64(v: &str) -> Result<Option<f64>, String> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_f64(v).map(Some)
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "problem.id" => self.problem = value.to_string(),
            "problem.theta_star" => self.theta_star = parse_f64(value)?,
            "schedule.kind" => {
                self.schedule_kind = match value {
                    "power" => ScheduleKind::Power,
                    "custom" => ScheduleKind::Custom,
                    _ => return Err(format!("`{value}` is not `power` or `custom`")),
                }
            }
            "schedule.c" => self.c = parse_f64(value)?,
            "schedule.beta" => self.beta = parse_list(value)?,
            "schedule.file" => self.schedule_file = Some(PathBuf::from(value)),
            "run.theta0" => self.theta0 = Some(parse_list(value)?),
            "run.seed" => self.seed = parse_u64(value)?,
            "run.sweep" => self.sweep = parse_u64(value)?,
            "run.steps" => self.steps = parse_u64(value)?,
            "run.stride" => self.stride = parse_u64(value)?,
            "output.dir" => self.out_dir = Some(PathBuf::from(value)),
            "output.prefix" => self.prefix = value.to_string(),
            "output.csv" => self.write_csv = parse_bool(value)?,
            "output.summary" => self.write_summary = parse_bool(value)?,
            "diagnostics.stop_times" => self.stop_times = parse_bool(value)?,
            "diagnostics.j" => self.j = parse_u64(value)?,
            "diagnostics.alpha" => self.alpha = auto_or_f64(value)?,
            "diagnostics.epsilon" => self.epsilon = parse_f64(value)?,
            "diagnostics.samples" => self.samples = parse_u64(value)? as usize,
            "classify.window_frac" => self.window_frac = parse_f64(value)?,
            "classify.cauchy_tol" => self.cauchy_tol = auto_or_f64(value)?,
            "classify.norm_floor" => self.norm_floor = parse_f64(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// `(key, value)` pairs in canonical order; unset optional keys are
    /// omitted.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |v: &Option<f64>| v.map_or("auto".to_string(), |x| format!("{x:?}"));
        let mut out = vec![
            ("problem.id", self.problem.clone()),
            ("problem.theta_star", format!("{:?}", self.theta_star)),
            (
                "schedule.kind",
                match self.schedule_kind {
                    ScheduleKind::Power => "power".into(),
                    ScheduleKind::Custom => "custom".into(),
                },
            ),
            ("schedule.c", format!("{:?}", self.c)),
            ("schedule.beta", fmt_list(&self.beta)),
        ];
        if let Some(f) = &self.schedule_file {
            out.push(("schedule.file", f.display().to_string()));
        }
        if let Some(t) = &self.theta0 {
            out.push(("run.theta0", fmt_list(t)));
        }
        out.extend([
            ("run.seed", self.seed.to_string()),
            ("run.sweep", self.sweep.to_string()),
            ("run.steps", self.steps.to_string()),
            ("run.stride", self.stride.to_string()),
        ]);
        if let Some(d) = &self.out_dir {
            out.push(("output.dir", d.display().to_string()));
        }
        out.extend([
            ("output.prefix", self.prefix.clone()),
            ("output.csv", self.write_csv.to_string()),
            ("output.summary", self.write_summary.to_string()),
            ("diagnostics.stop_times", self.stop_times.to_string()),
            ("diagnostics.j", self.j.to_string()),
            ("diagnostics.alpha", opt(&self.alpha)),
            ("diagnostics.epsilon", format!("{:?}", self.epsilon)),
            ("diagnostics.samples", self.samples.to_string()),
            ("classify.window_frac", format!("{:?}", self.window_frac)),
            ("classify.cauchy_tol", opt(&self.cauchy_tol)),
            ("classify.norm_floor", format!("{:?}", self.norm_floor)),
        ]);
        out
    }

    /// Canonical config text; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Parse config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<(String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| ConfigError {
                origin: Origin::Line(line_no),
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `section.key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
                return Err(err(format!("duplicate key `{key}` (first set on line {first})")));
            }
            cfg.set(key, value).map_err(err)?;
            seen.push((key.to_string(), line_no));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: Origin::Flag("--config".into()),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Apply `key=value` overrides in order.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        for o in overrides {
            let (key, value) = o.split_once('=').ok_or_else(|| ConfigError {
                origin: Origin::Flag(o.clone()),
                message: "expected key=value".into(),
            })?;
            let key = key.trim();
            self.set(key, value.trim()).map_err(|message| ConfigError {
                origin: Origin::Flag(key.to_string()),
                message,
            })?;
        }
        Ok(())
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.sweep).map(move |i| self.seed.wrapping_add(i))
    }

    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| {
            std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from)
        })
    }

    pub fn csv_name(&self, seed: u64) -> String {
        format!("{}_seed{seed}.csv", self.prefix)
    }

    pub fn summary_name(&self) -> String {
        format!("{}_summary.json", self.prefix)
    }

    /// Check field ranges and build the problem, schedule and start point.
    pub fn build(&self) -> Result<RunSetup, ConfigError> {
        let problem = if self.problem == "linreg" {
            if !self.theta_star.is_finite() {
                return Err(ConfigError::field("problem.theta_star", "must be finite"));
            }
            make_linreg(self.theta_star)
        } else {
            make_problem(&self.problem).map_err(|e| ConfigError::field("problem.id", e.to_string()))?
        };
        let dim = problem.dim();
        let schedule = match self.schedule_kind {
            ScheduleKind::Power => power_schedule(self.c, &self.beta, dim)
                .map_err(|e| ConfigError::field("schedule.beta", e.to_string()))?,
            ScheduleKind::Custom => {
                let path = self
                    .schedule_file
                    .as_ref()
                    .ok_or_else(|| ConfigError::field("schedule.file", "required when schedule.kind = custom"))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::field("schedule.file", format!("cannot read {}: {e}", path.display())))?;
                StepSchedule::parse_custom(dim, &text)
                    .map_err(|e| ConfigError::field("schedule.file", e.to_string()))?
            }
        };
        let theta0 = self.theta0.clone().unwrap_or_else(|| vec![0.0; dim]);
        problem
            .check_theta(&theta0)
            .map_err(|e| ConfigError::field("run.theta0", e.to_string()))?;
        if self.steps == 0 {
            return Err(ConfigError::field("run.steps", "must be at least 1"));
        }
        if self.stride == 0 {
            return Err(ConfigError::field("run.stride", "must be at least 1"));
        }
        if self.sweep == 0 {
            return Err(ConfigError::field("run.sweep", "must be at least 1"));
        }
        if let Some(len) = schedule.len() {
            if (len as u64) < self.steps {
                return Err(ConfigError::field(
                    "schedule.file",
                    format!("provides {len} matrices but run.steps = {}", self.steps),
                ));
            }
        }
        if self.prefix.is_empty() || self.prefix.contains(['/', '\\']) {
            return Err(ConfigError::field(
                "output.prefix",
                "must be a non-empty file name stem",
            ));
        }
        if !(self.window_frac > 0.0 && self.window_frac <= 1.0) {
            return Err(ConfigError::field("classify.window_frac", "must lie in (0, 1]"));
        }
        if let Some(t) = self.cauchy_tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(ConfigError::field("classify.cauchy_tol", "must be positive or `auto`"));
            }
        }
        if !(self.norm_floor.is_finite() && self.norm_floor > 0.0) {
            return Err(ConfigError::field("classify.norm_floor", "must be positive"));
        }
        let alpha = self.alpha.unwrap_or(problem.alpha());
        if self.stop_times {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(ConfigError::field("diagnostics.alpha", "must lie in (0, 1]"));
            }
            if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
                return Err(ConfigError::field("diagnostics.epsilon", "must be positive"));
            }
            if self.stride != 1 {
                return Err(ConfigError::field(
                    "run.stride",
                    "must be 1 when diagnostics.stop_times = true",
                ));
            }
            if self.j >= self.steps {
                return Err(ConfigError::field("diagnostics.j", "must be below run.steps"));
            }
        }
        Ok(RunSetup {
            problem,
            schedule,
            theta0,
            alpha,
        })
    }
}

/// Validated inputs of a run.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub problem: Problem,
    pub schedule: StepSchedule,
    pub theta0: Vec<f64>,
    pub alpha: f64,
}

impl RunSetup {
    /// Distance of the final iterate to the known optimum.
    pub fn distance_to_optimum(&self, traj: &Trajectory) -> Option<f64> {
        let opt = self.problem.optimum()?;
        let d: f64 = traj.final_theta.iter().zip(opt).map(|(a, b)| (a - b) * (a - b)).sum();
        Some(d.sqrt())
    }
}
