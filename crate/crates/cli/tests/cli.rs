use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use serde_json::Value;
use sgdlab_cli::config::{Origin, RunConfig, ScheduleKind};
use sgdlab_cli::run_cli;

const BIN: &str = env!("CARGO_BIN_EXE_sgdlab");

fn schema() -> jsonschema::Validator {
    let text = include_str!("../../../docs/report-schema-v1.json");
    let schema: Value = serde_json::from_str(text).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

/// Run in-process; returns `(exit code, stdout, stderr)`.
fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli(
        std::iter::once("sgdlab").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn report(args: &[&str]) -> Value {
    let (code, out, err) = cli(args);
    assert_eq!(code, 0, "{args:?} failed: {err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_valid(&v);
    v
}

fn assert_valid(v: &Value) {
    let validator = schema();
    let errors: Vec<String> = validator
        .iter_errors(v)
        .map(|e| format!("{e} at {}", e.instance_path))
        .collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn list_prints_the_catalog() {
    let (code, out, _) = cli(&["list"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 6);
    assert!(out.contains("poisson dim=1 optimum=0"), "{out}");
    assert!(
        rows.iter().any(|r| r.starts_with("limit-cycle dim=2 optimum=none")),
        "{out}"
    );
}

#[test]
fn run_writes_csv_rows_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let v = report(&["run", "--out", path_str(&out), "--set", "run.steps=10"]);
    let data = &v["data"];
    assert_eq!(data["problem"], "linreg");
    assert_eq!(data["seeds"][0]["records"], 11);
    let csv = std::fs::read_to_string(out.join("run_seed0.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,theta_0,F,grad_norm,theta_norm,lmin,lmax");
    assert_eq!(lines.len(), 12);
    assert!(lines[1].starts_with("0,"));
    assert!(lines[11].starts_with("10,"));
    assert!(out.join("run_summary.json").exists());

    let again = dir.path().join("b");
    report(&["run", "--out", path_str(&again), "--set", "run.steps=10"]);
    assert_eq!(
        std::fs::read(out.join("run_seed0.csv")).unwrap(),
        std::fs::read(again.join("run_seed0.csv")).unwrap()
    );
}

#[test]
fn run_sweep_reports_every_seed_and_stop_times() {
    let dir = tempfile::tempdir().unwrap();
    let v = report(&[
        "run",
        "--out",
        path_str(dir.path()),
        "--set",
        "problem.id=poisson",
        "--set",
        "run.theta0=2",
        "--set",
        "run.steps=300",
        "--set",
        "run.sweep=3",
        "--set",
        "run.seed=5",
        "--set",
        "diagnostics.stop_times=true",
        "--set",
        "diagnostics.j=100",
    ]);
    let seeds = v["data"]["seeds"].as_array().unwrap();
    assert_eq!(seeds.len(), 3);
    for (s, expect) in seeds.iter().zip([5, 6, 7]) {
        assert_eq!(s["seed"], expect);
        assert_eq!(s["stop_times"]["j"], 100);
        assert!(dir.path().join(format!("run_seed{expect}.csv")).exists());
    }
    assert_eq!(v["data"]["aggregate"]["runs"], 3);
}

#[test]
fn converged_runs_report_their_limit() {
    let dir = tempfile::tempdir().unwrap();
    let v = report(&[
        "run",
        "--out",
        path_str(dir.path()),
        "--set",
        "problem.id=ffn-noiseless",
        "--set",
        "schedule.beta=1",
        "--set",
        "run.steps=2000",
        "--set",
        "output.csv=false",
    ]);
    let c = &v["data"]["seeds"][0]["classification"];
    assert_eq!(c["verdict"], "converged");
    assert_eq!(c["point"].as_array().unwrap().len(), 4);
    assert!(v["data"]["seeds"][0]["csv"].is_null());
    assert!(!dir.path().join("run_seed0.csv").exists());
}

#[test]
fn config_files_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.cfg");
    std::fs::write(
        &cfg,
        "# poisson\nproblem.id = poisson\nrun.theta0 = 0.5\nrun.steps = 50\n",
    )
    .unwrap();
    let (code, out, _) = cli(&[
        "run",
        "--config",
        path_str(&cfg),
        "--set",
        "run.seed=4",
        "--print-config",
    ]);
    assert_eq!(code, 0);
    let parsed = RunConfig::parse(&out).unwrap();
    assert_eq!(parsed.problem, "poisson");
    assert_eq!(parsed.theta0, Some(vec![0.5]));
    assert_eq!(parsed.seed, 4);
    assert_eq!(parsed.steps, 50);
}

#[test]
fn usage_errors_exit_with_one() {
    let (code, _, err) = cli(&["run", "--set", "run.sed=2", "--print-config"]);
    assert_eq!(code, 1);
    assert!(err.contains("--set run.sed: unknown key"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dup.cfg");
    std::fs::write(&cfg, "run.seed = 1\n\nrun.seed = 2\n").unwrap();
    let (code, _, err) = cli(&["run", "--config", path_str(&cfg)]);
    assert_eq!(code, 1);
    assert!(err.contains("line 3: duplicate key"), "{err}");

    let (code, _, err) = cli(&["run", "--out", path_str(dir.path()), "--set", "problem.id=nope"]);
    assert_eq!(code, 1);
    assert!(err.contains("field `problem.id`"), "{err}");

    assert_eq!(cli(&["frobnicate"]).0, 1);
    assert_eq!(cli(&["witness", "--problem", "ffn", "--assumption", "convexity"]).0, 1);
    assert_eq!(cli(&["check-schedule", "--alpha", "2"]).0, 1);
    assert_eq!(cli(&["limit-cycle", "--theta0", "-2,0"]).0, 1);
    assert_eq!(cli(&["--help"]).0, 0);
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = cli(&[
        "run",
        "--out",
        path_str(dir.path()),
        "--set",
        "problem.id=poisson",
        "--set",
        "run.theta0=800",
    ]);
    assert_eq!(code, 2, "{err}");
    assert!(
        err.contains("seed 0 stopped at step 1: stochastic gradient of `poisson` overflowed"),
        "{err}"
    );
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_valid(&v);
    assert_eq!(v["data"]["seeds"][0]["status"]["state"], "non-finite");
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let status = |args: &[&str]| Command::new(BIN).args(args).output().unwrap().status.code();
    assert_eq!(status(&["list"]), Some(0));
    assert_eq!(status(&["run", "--set", "bogus=1"]), Some(1));
    assert_eq!(
        status(&[
            "run",
            "--out",
            path_str(dir.path()),
            "--set",
            "problem.id=poisson",
            "--set",
            "run.theta0=800"
        ]),
        Some(2)
    );
}

#[test]
fn output_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["run", "--set", "run.steps=5", "--set", "output.prefix=env"])
        .env("SGDLAB_OUT_DIR", dir.path())
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("env_seed0.csv").exists());
    assert!(dir.path().join("env_summary.json").exists());
}

#[test]
fn check_schedule_examples() {
    let v = report(&["check-schedule", "--beta", "1"]);
    for p in ["p1", "p2", "p3", "p4"] {
        assert_eq!(v["data"][p], "holds");
    }
    assert!((v["data"]["s_value"].as_f64().unwrap() - 1.644934).abs() < 1e-6);

    let v = report(&["check-schedule", "--beta", "0.5"]);
    assert_eq!(v["data"]["p2"], "fails");
    assert!(v["data"]["s_value"].is_null());

    let v = report(&["check-schedule", "--beta", "1,0.8"]);
    assert_eq!(v["data"]["kind"], "diagonal-power");
    assert_eq!(v["data"]["p4"], "holds");

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("steps.txt");
    std::fs::write(&file, "1\n0.5\n0.25 0.2\n").unwrap();
    let v = report(&["check-schedule", "--file", path_str(&file), "--dim", "2"]);
    assert_eq!(v["data"]["kind"], "custom-sequence");
    assert_eq!(v["data"]["p1"], "holds");
    assert_eq!(v["data"]["p2"], "inconclusive");
    assert_eq!(v["data"]["partial_sums"]["horizon"], 3);

    assert_eq!(cli(&["check-schedule", "--file", path_str(&file)]).0, 1);
}

#[test]
fn witness_reports() {
    for (problem, assumption, extra) in [
        ("ffn", "global-lipschitz", ["--L", "1000"]),
        ("poisson", "L0L1-smooth", ["--L0", "1"]),
        ("ffn", "bounded-variance", ["--B", "3"]),
        ("rnn", "global-lipschitz", ["--L", "10"]),
    ] {
        let mut args = vec!["witness", "--problem", problem, "--assumption", assumption];
        args.extend(extra);
        let v = report(&args);
        assert_eq!(v["data"]["status"], "witness", "{problem} {assumption}");
        assert!(v["data"]["margin"].as_f64().unwrap() > 0.0);
    }

    let v = report(&["witness", "--problem", "poisson", "--assumption", "expected-smoothness"]);
    assert!(v["data"]["points"][0][0].as_f64().unwrap() >= 4f64.ln());

    let v = report(&[
        "witness",
        "--problem",
        "linreg",
        "--assumption",
        "global-lipschitz",
        "--L",
        "2",
    ]);
    assert_eq!(v["data"]["status"], "no-witness-exists");
    assert!(v["data"]["reason"].as_str().unwrap().contains("1-Lipschitz"));
}

#[test]
fn limit_cycle_from_the_circle_stays_put() {
    let dir = tempfile::tempdir().unwrap();
    let v = report(&[
        "limit-cycle",
        "--theta0",
        "1,0",
        "--steps",
        "1000",
        "--horizon",
        "5",
        "--out",
        path_str(dir.path()),
    ]);
    let data = &v["data"];
    assert_eq!(data["flow"]["final_theta"], serde_json::json!([1.0, 0.0]));
    assert_eq!(data["gd"]["final_theta"], serde_json::json!([1.0, 0.0]));
    for f in ["flow.csv", "gd.csv", "limit_cycle.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let saved: Value = serde_json::from_slice(&std::fs::read(dir.path().join("limit_cycle.json")).unwrap()).unwrap();
    assert_eq!(saved, v);
    if data["plot"].is_string() {
        let svg = std::fs::read_to_string(dir.path().join("limit_cycle.svg")).unwrap();
        assert!(svg.contains("<svg"));
    }
}

#[test]
fn limit_cycle_off_the_circle() {
    let dir = tempfile::tempdir().unwrap();
    let v = report(&[
        "limit-cycle",
        "--steps",
        "20000",
        "--horizon",
        "20",
        "--out",
        path_str(dir.path()),
    ]);
    let gd = &v["data"]["gd"];
    assert_eq!(gd["status"]["state"], "completed");
    assert_eq!(gd["steps"], 20000);
    let flow_rows = std::fs::read_to_string(dir.path().join("flow.csv"))
        .unwrap()
        .lines()
        .count();
    // header + t = 0 + every 100th of 20000 RK4 steps
    assert_eq!(flow_rows, 1 + 1 + 200);
}

#[test]
fn validate_reports_every_check() {
    let v = report(&["validate", "--problem", "linreg", "--n", "20000", "--points", "20"]);
    let p = &v["data"]["problems"][0];
    assert_eq!(p["problem"], "linreg");
    assert_eq!(p["points"], 20);
    assert!(p["grad_max_rel_err"].as_f64().unwrap() < 1e-6);
    assert!(p["unbiased_max_abs_err"].as_f64().unwrap() < 1e-12);
    assert_eq!(p["moment_exact"], 1.5);
    assert_eq!(v["data"]["passed"], true);

    let v = report(&["validate", "--n", "5000", "--points", "5"]);
    let ids: Vec<&str> = v["data"]["problems"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["problem"].as_str().unwrap())
        .collect();
    assert_eq!(ids.len(), 6);
    let poisson = v["data"]["problems"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["problem"] == "poisson")
        .unwrap();
    assert!(poisson["unbiased_max_abs_err"].is_null());

    assert_eq!(cli(&["validate", "--problem", "ffn", "--theta", "1,2"]).0, 1);
}

#[test]
fn schema_rejects_malformed_reports() {
    let validator = schema();
    let good = report(&["check-schedule", "--beta", "0.7"]);
    let mut bad = good.clone();
    bad["schema"] = "sgdlab-report/v2".into();
    assert!(!validator.is_valid(&bad));
    let mut bad = good.clone();
    bad["data"]["extra"] = 1.into();
    assert!(!validator.is_valid(&bad));
    let mut bad = good;
    bad["data"]["p2"] = "maybe".into();
    assert!(!validator.is_valid(&bad));
}

fn config_strategy() -> impl Strategy<Value = RunConfig> {
    let num = -1e3f64..1e3;
    (
        (
            prop::sample::select(vec!["linreg", "ffn", "rnn", "poisson", "ffn-noiseless", "limit-cycle"]),
            num.clone(),
            prop::bool::ANY,
            prop::collection::vec(0.01f64..1.0, 1..4),
            prop::option::of(prop::collection::vec(num.clone(), 1..5)),
            any::<u64>(),
            1u64..100,
            1u64..100_000,
        ),
        (
            prop::option::of("[a-z]{1,8}"),
            "[a-z][a-z0-9_]{0,8}",
            prop::bool::ANY,
            prop::option::of(0.01f64..1.0),
            prop::option::of(1e-9f64..1.0),
            1e-3f64..1.0,
            1.0f64..1e9,
        ),
    )
        .prop_map(
            |(
                (problem, ts, custom, beta, theta0, seed, sweep, steps),
                (dir, prefix, flag, alpha, tol, frac, floor),
            )| {
                RunConfig {
                    problem: problem.into(),
                    theta_star: ts,
                    schedule_kind: if custom {
                        ScheduleKind::Custom
                    } else {
                        ScheduleKind::Power
                    },
                    schedule_file: custom.then(|| "steps.txt".into()),
                    beta,
                    theta0,
                    seed,
                    sweep,
                    steps,
                    out_dir: dir.map(Into::into),
                    prefix,
                    write_csv: flag,
                    stop_times: !flag,
                    alpha,
                    cauchy_tol: tol,
                    window_frac: frac,
                    norm_floor: floor,
                    ..RunConfig::default()
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn config_text_round_trips(cfg in config_strategy()) {
        let text = cfg.to_text();
        prop_assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_reported_with_their_line(pad in 0usize..5, key in "[a-z]{3,6}\\.[a-z]{3,6}") {
        prop_assume!(!sgdlab_cli::config::KEYS.contains(&key.as_str()));
        let text = format!("{}{key} = 1\n", "run.seed = 1\n".repeat(pad.min(1)) + &"\n".repeat(pad));
        let e = RunConfig::parse(&text).unwrap_err();
        prop_assert_eq!(e.origin, Origin::Line(pad.min(1) + pad + 1));
    }
}
