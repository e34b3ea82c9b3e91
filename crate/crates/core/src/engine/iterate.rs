use crate::engine::{EngineError, Record, RunStatus, ScalarSteps, StopEvents, Trajectory};
use crate::norm2;
use crate::problems::{Problem, ProblemError};
use crate::rng::{CounterStreams, Domain};
use crate::schedules::StepSchedule;

/// Shared recursion `θ_{k+1} = θ_k − d_k` where `update` writes `d_k`.
struct Recursion<'a> {
    problem: &'a Problem,
    steps: u64,
    stride: u64,
}

impl Recursion<'_> {
    fn record(&self, k: u64, theta: &[f64], (lmin, lmax): (f64, f64), grad: &mut [f64]) -> Record {
        let f = self.problem.mean_loss(theta).unwrap_or(f64::INFINITY);
        let grad_norm = match self.problem.mean_grad_into(theta, grad) {
            Ok(()) => norm2(grad),
            Err(_) => f64::INFINITY,
        };
        Record {
            k,
            theta: theta.to_vec(),
            f,
            grad_norm,
            theta_norm: norm2(theta),
            lmin,
            lmax,
        }
    }

    fn run<E, U, O>(
        &self,
        theta0: &[f64],
        extremes: E,
        mut update: U,
        observer: &mut O,
    ) -> (Vec<Record>, Vec<f64>, RunStatus)
    where
        E: Fn(u64) -> (f64, f64),
        U: FnMut(u64, &[f64], &mut [f64]) -> Result<(), ProblemError>,
        O: FnMut(u64, &[f64]) + ?Sized,
    {
        let p = theta0.len();
        let mut theta = theta0.to_vec();
        let mut next = vec![0.0; p];
        let mut d = vec![0.0; p];
        let mut scratch = vec![0.0; p];
        let mut records = vec![self.record(0, &theta, extremes(0), &mut scratch)];
        observer(0, &theta);
        for k in 0..self.steps {
            let failure = match update(k, &theta, &mut d) {
                Ok(()) => {
                    for i in 0..p {
                        next[i] = theta[i] - d[i];
                    }
                    next.iter()
                        .any(|x| !x.is_finite())
                        .then(|| "iterate has a non-finite coordinate".to_string())
                }
                Err(e) => {
                    next.fill(f64::NAN);
                    Some(e.to_string())
                }
            };
            let k1 = k + 1;
            if let Some(reason) = failure {
                let (lmin, lmax) = extremes(k1);
                records.push(Record {
                    k: k1,
                    theta: next.clone(),
                    f: f64::NAN,
                    grad_norm: f64::NAN,
                    theta_norm: norm2(&next),
                    lmin,
                    lmax,
                });
                return (records, theta, RunStatus::NonFinite { step: k1, reason });
            }
            std::mem::swap(&mut theta, &mut next);
            observer(k1, &theta);
            if k1 % self.stride == 0 || k1 == self.steps {
                records.push(self.record(k1, &theta, extremes(k1), &mut scratch));
            }
        }
        (records, theta, RunStatus::Completed)
    }
}

fn check_run(problem: &Problem, theta0: &[f64], steps: u64, stride: u64) -> Result<(), EngineError> {
    problem.check_theta(theta0)?;
    if steps == 0 {
        return Err(EngineError::ZeroSteps);
    }
    if stride == 0 {
        return Err(EngineError::ZeroStride);
    }
    Ok(())
}

/// `θ_{k+1} = θ_k − M_k ḟ(θ_k, X_{k+1})` for `k < steps`, recording every
/// `stride` steps plus the first and last iterate. Step `k` draws its sample
/// from stream `k` of `seed`.
pub fn run_sgd(
    problem: &Problem,
    schedule: &StepSchedule,
    theta0: &[f64],
    seed: u64,
    steps: u64,
    stride: u64,
) -> Result<Trajectory, EngineError> {
    run_sgd_observed(problem, schedule, theta0, seed, steps, stride, &mut |_, _| {})
}

/// [`run_sgd`] that additionally hands every iterate `(k, θ_k)` to
/// `observer`, for statistics that should not require storing all records.
pub fn run_sgd_observed(
    problem: &Problem,
    schedule: &StepSchedule,
    theta0: &[f64],
    seed: u64,
    steps: u64,
    stride: u64,
    observer: &mut dyn FnMut(u64, &[f64]),
) -> Result<Trajectory, EngineError> {
    check_run(problem, theta0, steps, stride)?;
    if schedule.dim() != problem.dim() {
        return Err(EngineError::DimensionMismatch {
            schedule: schedule.dim(),
            problem: problem.dim(),
        });
    }
    if let Some(len) = schedule.len() {
        if (len as u64) < steps {
            return Err(EngineError::ScheduleTooShort { len, steps });
        }
    }
    let streams = CounterStreams::new(seed, Domain::Samples);
    let mut g = vec![0.0; problem.dim()];
    let rec = Recursion { problem, steps, stride };
    let (records, final_theta, status) = rec.run(
        theta0,
        |k| schedule.extremes(k).unwrap_or((f64::NAN, f64::NAN)),
        |k, theta, d| {
            let x = problem.sample(&mut streams.stream(k));
            problem.stoch_grad_into(theta, &x, &mut g)?;
            schedule.matrix(k).expect("length checked").apply(&g, d);
            Ok(())
        },
        observer,
    );
    Ok(Trajectory {
        problem: problem.id().to_string(),
        schedule: schedule.describe(),
        seed: Some(seed),
        steps,
        stride,
        records,
        final_theta,
        status,
        events: StopEvents::default(),
    })
}

/// `φ_{k+1} = φ_k − α_k Ḟ(φ_k)`. Records report `λ_min = λ_max = α_k`.
pub fn run_gd(
    problem: &Problem,
    steps_seq: &ScalarSteps,
    theta0: &[f64],
    steps: u64,
    stride: u64,
) -> Result<Trajectory, EngineError> {
    run_gd_observed(problem, steps_seq, theta0, steps, stride, &mut |_, _| {})
}

pub fn run_gd_observed(
    problem: &Problem,
    steps_seq: &ScalarSteps,
    theta0: &[f64],
    steps: u64,
    stride: u64,
    observer: &mut dyn FnMut(u64, &[f64]),
) -> Result<Trajectory, EngineError> {
    check_run(problem, theta0, steps, stride)?;
    steps_seq.validate(steps)?;
    let mut g = vec![0.0; problem.dim()];
    let rec = Recursion { problem, steps, stride };
    let (records, final_theta, status) = rec.run(
        theta0,
        |k| {
            let a = steps_seq.at(k).unwrap_or(f64::NAN);
            (a, a)
        },
        |k, theta, d| {
            problem.mean_grad_into(theta, &mut g)?;
            let a = steps_seq.at(k).expect("length validated");
            for (di, gi) in d.iter_mut().zip(&g) {
                *di = a * gi;
            }
            Ok(())
        },
        observer,
    );
    Ok(Trajectory {
        problem: problem.id().to_string(),
        schedule: steps_seq.describe(),
        seed: None,
        steps,
        stride,
        records,
        final_theta,
        status,
        events: StopEvents::default(),
    })
}
