//! End-to-end acceptance checks. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and exits non-zero if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use sgdlab::diagnostics::{
    classify_outcome, detect_stop_times, fd_gradient, max_rel_err, mc_moment, support_mean_grad, witness_l0l1,
    witness_lipschitz, ClassifyConfig, StopScan, WitnessOutcome,
};
use sgdlab::engine::{run_gd, run_sgd, ScalarSteps};
use sgdlab::rng::{CounterStreams, Domain};
use sgdlab::schedules::{classify_schedule, Verdict};
use sgdlab::{make_problem, power_schedule, Problem, PROBLEM_IDS};

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn points(problem: &Problem, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = CounterStreams::new(seed, Domain::Refinement).stream(0);
    (0..n).map(|_| problem.test_box().point(&mut rng)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn gradient_consistency() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0f64, "");
    for id in PROBLEM_IDS {
        let p = make_problem(id).unwrap();
        for t in points(&p, 100, 1) {
            let fd = fd_gradient(&p, &t, 1e-5).unwrap();
            let e = max_rel_err(&fd, &p.mean_grad(&t).unwrap());
            if e > worst.0 {
                worst = (e, id);
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst.0 < 1e-6 && within(elapsed, 10),
        format!(
            "max rel err {:.2e} ({}) over 6 x 100 points, {:.2?}",
            worst.0, worst.1, elapsed
        ),
    )
}

fn exact_unbiasedness() -> Outcome {
    let mut worst = 0.0f64;
    for id in ["linreg", "ffn", "rnn", "ffn-noiseless"] {
        let p = make_problem(id).unwrap();
        for t in points(&p, 100, 2) {
            let avg = support_mean_grad(&p, &t).unwrap().expect("finite support");
            let g = p.mean_grad(&t).unwrap();
            for (a, b) in avg.iter().zip(&g) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Outcome::new(worst < 1e-12, format!("max abs gap {worst:.2e} over 4 x 100 points"))
}

/// Mean of `ḟ₁(θ, X)²` over `n` draws and its jackknife standard error
/// (for a sample mean the jackknife error is `s/√n`).
fn first_component_moment(p: &Problem, theta: &[f64], n: u64, seed: u64) -> (f64, f64) {
    let mut rng = CounterStreams::new(seed, Domain::MonteCarlo).stream(0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut g = vec![0.0; p.dim()];
    for _ in 0..n {
        let x = p.sample(&mut rng);
        p.stoch_grad_into(theta, &x, &mut g).unwrap();
        let v = g[0] * g[0];
        sum += v;
        sum_sq += v * v;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq - nf * mean * mean) / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

fn moment_identities() -> Outcome {
    const N: u64 = 1_000_000;
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst_z = Vec::new();

    let mut check = |label: &str, est: f64, se: f64, display: f64| -> f64 {
        let z = (est - display).abs() / se;
        if z.is_nan() || z > 3.0 {
            failures.push(format!("{label}: MC {est:.6} vs {display:.6} ({z:.1} se)"));
        }
        z
    };

    for id in ["linreg", "ffn", "rnn", "poisson"] {
        let p = make_problem(id).unwrap();
        let pts = if id == "poisson" {
            [-1.0, -0.6, -0.2, 0.2, 0.6].iter().map(|&t| vec![t]).collect()
        } else {
            points(&p, 5, 3)
        };
        let mut z_max = 0.0f64;
        for (i, t) in pts.iter().enumerate() {
            let seed = 300 + i as u64;
            let g = p.mean_grad(t).unwrap();
            let label = format!("{id} at {t:.3?}");
            let z = match id {
                "ffn" => {
                    let (est, se) = first_component_moment(&p, t, N, seed);
                    let v1 = t[3] * t[2] * t[1];
                    let display = 0.25 * v1 * v1 / (1.0 + (v1 * t[0]).exp()).powi(2) + g[0] * g[0];
                    check(&label, est, se, display)
                }
                "rnn" => {
                    let est = mc_moment(&p, t, 2.0, N, seed).unwrap();
                    let display = 2.0 * norm(&g).powi(2);
                    check(&label, est.estimate, est.std_error, display)
                }
                _ => {
                    // linreg: (θ−θ*)² + 1 + Ḟ²; poisson: the second-moment display
                    let est = mc_moment(&p, t, 2.0, N, seed).unwrap();
                    check(&label, est.estimate, est.std_error, p.moment_bound(t).unwrap())
                }
            };
            z_max = z_max.max(z);
        }
        worst_z.push(format!("{id} {z_max:.2}"));
    }
    let elapsed = start.elapsed();
    let mut detail = format!("max z per problem: {}; {:.2?}", worst_z.join(", "), elapsed);
    if !failures.is_empty() {
        detail.push_str(&format!(
            "; {} point(s) outside 3 se, first: {}",
            failures.len(),
            failures[0]
        ));
    }
    Outcome::new(failures.is_empty() && within(elapsed, 60), detail)
}

/// Verdicts for `c (k+1)^{-β}` diagonal schedules from the p-series rules.
fn symbolic_verdicts(bmin: f64, bmax: f64, alpha: f64) -> [bool; 4] {
    [
        true,
        bmin * (1.0 + alpha) > 1.0,
        bmax <= 1.0,
        alpha * bmin > bmax - bmin,
    ]
}

fn schedule_classifier() -> Outcome {
    let pairs = [
        (0.7, 0.7),
        (0.5, 0.5),
        (0.4, 0.4),
        (1.0, 1.0),
        (0.6, 0.9),
        (0.5, 1.0),
        (0.8, 1.0),
        (0.55, 0.6),
        (0.9, 0.95),
        (0.34, 0.34),
    ];
    let mut mismatches = Vec::new();
    let mut cases = 0;
    for alpha in [1.0, 0.5] {
        for (bmin, bmax) in pairs {
            cases += 1;
            let r = classify_schedule(&power_schedule(1.0, &[bmin, bmax], 2).unwrap(), alpha);
            let got = [r.p1, r.p2, r.p3, r.p4].map(|v| v == Verdict::Holds);
            if got != symbolic_verdicts(bmin, bmax, alpha) {
                mismatches.push(format!("alpha={alpha} beta=({bmin},{bmax})"));
            }
        }
    }
    let harmonic = classify_schedule(&power_schedule(1.0, &[1.0], 1).unwrap(), 1.0);
    let slow = classify_schedule(&power_schedule(1.0, &[0.5], 1).unwrap(), 1.0);
    let diagonal = classify_schedule(&power_schedule(1.0, &[1.0, 0.8], 2).unwrap(), 1.0);
    let named = harmonic.admissible() && slow.p2 == Verdict::Fails && diagonal.admissible();
    Outcome::new(
        mismatches.is_empty() && named,
        format!(
            "{}/{cases} grid cases match; beta=1 admissible {}, beta=0.5 P2 {:?}, diagonal (1, 0.8) admissible {}",
            cases - mismatches.len(),
            harmonic.admissible(),
            slow.p2,
            diagonal.admissible()
        ),
    )
}

fn witness_margin(p: &Problem, outcome: &WitnessOutcome) -> Option<f64> {
    let report = outcome.report()?;
    let (_, _, margin) = report.recompute(p).ok()?;
    Some(margin)
}

fn show(m: Option<f64>) -> String {
    m.map_or("none".into(), |m| format!("{m:.3e}"))
}

fn witness_soundness() -> Outcome {
    let ffn = make_problem("ffn").unwrap();
    let poisson = make_problem("poisson").unwrap();
    let linreg = make_problem("linreg").unwrap();
    let mut margins = Vec::new();
    let mut ok = true;
    for l in [1.0, 1e3, 1e6] {
        let m = witness_lipschitz(&ffn, l).ok().and_then(|o| witness_margin(&ffn, &o));
        ok &= m.is_some_and(|m| m > 0.0);
        margins.push(format!("ffn L={l:e}: {}", show(m)));
    }
    let m = witness_l0l1(&poisson, 1.0, 1.0)
        .ok()
        .and_then(|o| witness_margin(&poisson, &o));
    ok &= m.is_some_and(|m| m > 0.0);
    margins.push(format!("poisson L0L1(1,1): {}", show(m)));
    let linreg_none = [
        witness_lipschitz(&linreg, 1.0),
        witness_lipschitz(&linreg, 10.0),
        witness_l0l1(&linreg, 1.0, 1.0),
    ]
    .into_iter()
    .all(|o| matches!(o, Ok(WitnessOutcome::NoWitness { .. })));
    ok &= linreg_none;
    Outcome::new(
        ok,
        format!(
            "recomputed margins {}; linreg no witness: {linreg_none}",
            margins.join(", ")
        ),
    )
}

fn sgd_convergence() -> Outcome {
    const K: u64 = 100_000;
    let start = Instant::now();
    let cfg = ClassifyConfig {
        window_frac: 0.1,
        cauchy_tol: Some(0.1),
        ..ClassifyConfig::default()
    };
    let linreg = make_problem("linreg").unwrap();
    let poisson = make_problem("poisson").unwrap();
    let schedule = power_schedule(1.0, &[0.7], 1).unwrap();
    let (mut dists, mut converged) = (Vec::new(), 0);
    for seed in 0..10 {
        let traj = run_sgd(&linreg, &schedule, &[0.0], seed, K, 1).unwrap();
        dists.push((traj.final_theta[0] - 1.0).abs());
        if classify_outcome(&traj, &cfg).unwrap().is_converged() {
            converged += 1;
        }
    }
    let norms: Vec<f64> = (0..10)
        .map(|seed| {
            let traj = run_sgd(&poisson, &schedule, &[0.5], seed, K, K).unwrap();
            traj.final_theta[0].abs()
        })
        .collect();
    let (lin_med, poi_med) = (median(dists), median(norms));
    let elapsed = start.elapsed();
    Outcome::new(
        lin_med < 0.1 && converged >= 8 && poi_med < 0.2 && within(elapsed, 120),
        format!(
            "linreg median |theta_K - theta*| {lin_med:.4}, converged {converged}/10; poisson median |theta_K| {poi_med:.4}; {elapsed:.2?}"
        ),
    )
}

fn stop_time_rarity() -> Outcome {
    const K: u64 = 10_000;
    const J: u64 = 100;
    const SEEDS: u64 = 100;
    let p = make_problem("poisson").unwrap();
    let schedule = power_schedule(1.0, &[0.7], 1).unwrap();
    let bound: f64 = (J + 1..K).map(|k| schedule.extremes(k).unwrap().1.powi(2)).sum();
    let sigma = (bound * (1.0 - bound) / SEEDS as f64).sqrt();
    let mut triggered = 0;
    for seed in 0..SEEDS {
        let traj = run_sgd(&p, &schedule, &[2.0], seed, K, 1).unwrap();
        let scan = StopScan {
            seed,
            ..StopScan::new(p.alpha(), J)
        };
        if detect_stop_times(&p, &traj, &scan).unwrap().nu.is_some() {
            triggered += 1;
        }
    }
    let freq = triggered as f64 / SEEDS as f64;
    Outcome::new(
        freq <= bound + 3.0 * sigma,
        format!("nu triggered on {triggered}/{SEEDS} seeds; bound {bound:.4} + 3 x {sigma:.4}"),
    )
}

fn limit_cycle_dichotomy(dir: &Path) -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_sgdlab"))
        .args([
            "limit-cycle",
            "--theta0",
            "1.5,0",
            "--horizon",
            "200",
            "--h",
            "1e-3",
            "--steps",
            "1000000",
        ])
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    let report: serde_json::Value = match serde_json::from_slice(&out.stdout) {
        Ok(v) => v,
        Err(e) => return Outcome::new(false, format!("unreadable report ({e}), exit {:?}", out.status.code())),
    };
    let data = &report["data"];
    let winding = data["flow"]["winding"].as_f64().unwrap_or(f64::NAN);
    let gap = data["flow"]["radius_gap"].as_f64().unwrap_or(f64::NAN);
    let osc = data["gd"]["final_half_angle_oscillation"].as_f64().unwrap_or(f64::NAN);
    let flow_ok = winding.abs() > 2.0 * std::f64::consts::PI && gap < 1e-2;
    let gd_ok = osc < 1e-2;
    Outcome::new(
        flow_ok && gd_ok && within(elapsed, 120),
        format!(
            "flow winding {winding:.4} (needs > 2pi), radius gap {gap:.4} (needs < 1e-2); gd final-half oscillation {osc:.2e}; {elapsed:.2?}"
        ),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let configs: [&[&str]; 3] = [
        &["problem.id=linreg", "run.steps=2000", "run.sweep=2"],
        &["problem.id=poisson", "run.theta0=0.5", "run.steps=2000", "run.stride=7"],
        &["problem.id=rnn", "schedule.beta=0.8", "run.seed=11", "run.steps=1500"],
    ];
    let mut identical = 0;
    let mut notes = Vec::new();
    for (i, sets) in configs.iter().enumerate() {
        let run = |tag: &str| -> Option<Vec<Vec<u8>>> {
            let out_dir = dir.join(format!("cfg{i}_{tag}"));
            let mut cmd = Command::new(env!("CARGO_BIN_EXE_sgdlab"));
            cmd.arg("run").arg("--out").arg(&out_dir);
            for s in *sets {
                cmd.args(["--set", s]);
            }
            let status = cmd.output().ok()?.status;
            if !status.success() {
                return None;
            }
            let mut csvs: Vec<_> = std::fs::read_dir(&out_dir)
                .ok()?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            csvs.sort();
            csvs.iter().map(|p| std::fs::read(p).ok()).collect()
        };
        match (run("a"), run("b")) {
            (Some(a), Some(b)) if !a.is_empty() && a == b => identical += 1,
            (Some(_), Some(_)) => notes.push(format!("config {i} differs")),
            _ => notes.push(format!("config {i} failed to run")),
        }
    }
    let mut detail = format!("{identical}/3 configs byte-identical across reruns");
    if !notes.is_empty() {
        detail.push_str(&format!(" ({})", notes.join(", ")));
    }
    Outcome::new(identical == 3, detail)
}

fn noiseless_equivalence() -> Outcome {
    const K: u64 = 10_000;
    let p = make_problem("ffn-noiseless").unwrap();
    let theta0 = [0.5, -0.3, 0.8, 0.2];
    let schedule = power_schedule(1.0, &[0.7], 4).unwrap();
    let gd = run_gd(&p, &ScalarSteps::Power { c: 1.0, beta: 0.7 }, &theta0, K, 1).unwrap();
    let mut equal = 0;
    for seed in [0, 1, 2] {
        let sgd = run_sgd(&p, &schedule, &theta0, seed, K, 1).unwrap();
        let same = sgd.records.len() == gd.records.len()
            && sgd
                .records
                .iter()
                .zip(&gd.records)
                .all(|(a, b)| a.theta.iter().zip(&b.theta).all(|(x, y)| x.to_bits() == y.to_bits()));
        if same {
            equal += 1;
        }
    }
    let nontrivial = gd.final_theta != theta0;
    Outcome::new(
        equal == 3 && nontrivial,
        format!("{equal}/3 seeds bitwise equal to GD over {} iterates", K + 1),
    )
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Check)> = vec![
        ("gradient consistency", Box::new(gradient_consistency)),
        ("exact unbiasedness", Box::new(exact_unbiasedness)),
        ("moment identities", Box::new(moment_identities)),
        ("schedule classifier", Box::new(schedule_classifier)),
        ("witness soundness", Box::new(witness_soundness)),
        ("sgd convergence surrogate", Box::new(sgd_convergence)),
        ("stop-time rarity", Box::new(stop_time_rarity)),
        (
            "limit-cycle dichotomy",
            Box::new(|| limit_cycle_dichotomy(&scratch.path().join("limit-cycle"))),
        ),
        (
            "determinism",
            Box::new(|| determinism(&scratch.path().join("determinism"))),
        ),
        ("noiseless equivalence", Box::new(noiseless_equivalence)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {name}: {}", i + 1, outcome.detail);
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
