use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sgdlab::diagnostics::{
    ball_bounds, classify_outcome, classify_points, descent_gap, detect_stop_times, l_epsilon, local_holder, mc_moment,
    witness_l0l1, witness_lipschitz, witness_noise, Assumption, ClassifyConfig, DiagnosticsError, NoiseChallenge,
    OutcomeVerdict, StopScan, WitnessOutcome,
};
use sgdlab::engine::{run_gd, run_sgd, ScalarSteps};
use sgdlab::{make_problem, power_schedule, Problem};

fn in_domain(p: &Problem, pts: &[Vec<f64>]) -> bool {
    pts.iter().all(|t| p.check_theta(t).is_ok())
}

#[test]
fn linreg_holder_constant_is_one() {
    let p = make_problem("linreg").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let h = local_holder(&p, &[0.0], &[2.0], 1.0, 64, &mut rng).unwrap();
    assert!((h.value - 1.0).abs() < 1e-12 && (h.endpoint_ratio - 1.0).abs() < 1e-12);
    let le = l_epsilon(&p, &[1.0], 1.0, 1e-3, 64, &mut rng).unwrap();
    // G(θ*) = 1, so the radius is 1
    assert!((le.radius - 1.0).abs() < 1e-15);
    assert!((le.value - 1.0).abs() < 1e-12);
}

#[test]
fn flat_field_falls_back_to_epsilon() {
    let p = make_problem("limit-cycle").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // G vanishes on the circle; the ball of radius ε^{1/2} stays within the
    // flat region to machine precision
    let le = l_epsilon(&p, &[1.0, 0.3], 1.0, 1e-8, 16, &mut rng).unwrap();
    assert!(le.fallback);
    assert_eq!(le.value, 1e-8);
    assert!(matches!(
        l_epsilon(&p, &[1.0, 0.3], 1.0, 0.0, 16, &mut rng),
        Err(DiagnosticsError::InvalidEpsilon(_))
    ));
    assert!(matches!(
        local_holder(&p, &[1.5, 0.3], &[1.5, 0.3], 1.0, 16, &mut rng),
        Err(DiagnosticsError::CoincidentPoints)
    ));
}

#[test]
fn ball_bounds_examples() {
    let lr = make_problem("linreg").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let b = ball_bounds(&lr, 2.0, 1.0, 21, 32, &mut rng).unwrap();
    assert!((b.l_r - 1.0).abs() < 1e-12);
    // G(θ) = 2(θ−1)² + 1 peaks at θ = −2
    assert!((b.g_r - 19.0).abs() < 1e-12);
    assert!((b.df_r - 6.0).abs() < 1e-12);

    let poisson = make_problem("poisson").unwrap();
    let small = ball_bounds(&poisson, 0.5, 1.0, 11, 16, &mut rng).unwrap();
    let large = ball_bounds(&poisson, 1.0, 1.0, 11, 16, &mut rng).unwrap();
    assert!(large.l_r > small.l_r && large.g_r > small.g_r && large.df_r > small.df_r);
    assert!(matches!(
        ball_bounds(&poisson, -1.0, 1.0, 11, 16, &mut rng),
        Err(DiagnosticsError::InvalidRadius(_))
    ));
}

#[test]
fn descent_is_an_equality_along_linreg_runs() {
    let p = make_problem("linreg").unwrap();
    let s = power_schedule(1.0, &[0.7], 1).unwrap();
    for seed in 0..5 {
        let t = run_sgd(&p, &s, &[-2.5], seed, 500, 1).unwrap();
        for w in t.records.windows(2) {
            let gap = descent_gap(&p, &w[0].theta, &w[1].theta, 1.0, 1.0).unwrap();
            assert!(gap.abs() < 1e-10, "seed {seed} k {}: {gap:e}", w[0].k);
        }
    }
}

#[test]
fn stop_times_quiet_for_small_poisson_steps() {
    let p = make_problem("poisson").unwrap();
    let s = power_schedule(1.0, &[0.7], 1).unwrap();
    for seed in 0..10 {
        let t = run_sgd(&p, &s, &[2.0], seed, 2_000, 1).unwrap();
        let st = detect_stop_times(&p, &t, &StopScan::new(1.0, 100)).unwrap();
        assert_eq!((st.tau, st.nu), (None, None), "seed {seed}");
        assert_eq!(st.scanned, 1_899);
    }
}

#[test]
fn witness_examples() {
    let rnn = make_problem("rnn").unwrap();
    let r = witness_lipschitz(&rnn, 10.0).unwrap();
    assert!(r.report().unwrap().margin > 0.0);

    let ffn = make_problem("ffn").unwrap();
    let r = witness_noise(&ffn, NoiseChallenge::Variance(100.0)).unwrap();
    let rep = r.report().unwrap();
    assert!(rep.lhs > 100.0);
    assert_eq!(rep.assumption, Assumption::BoundedVariance);

    let nf = make_problem("ffn-noiseless").unwrap();
    assert!(matches!(
        witness_noise(&nf, NoiseChallenge::Variance(1e-9)).unwrap(),
        WitnessOutcome::NoWitness { .. }
    ));

    let poisson = make_problem("poisson").unwrap();
    let es = NoiseChallenge::ExpectedSmoothness {
        c0: 1.0,
        c1: 1.0,
        c2: 1.0,
    };
    assert!(witness_noise(&poisson, es).unwrap().report().unwrap().margin > 0.0);
    assert!(matches!(
        witness_noise(&ffn, es),
        Err(DiagnosticsError::UnsupportedChallenge { .. })
    ));

    let lc = make_problem("limit-cycle").unwrap();
    assert!(matches!(
        witness_lipschitz(&lc, 1.0),
        Err(DiagnosticsError::UnsupportedChallenge { .. })
    ));
    assert!(matches!(
        witness_lipschitz(&ffn, -1.0),
        Err(DiagnosticsError::InvalidConstant { .. })
    ));
}

#[test]
fn witnesses_are_sound_across_problems_and_constants() {
    let constants = [1e-3, 0.5, 1.0, 7.0, 1e2, 1e4];
    for id in ["linreg", "ffn", "rnn", "poisson", "ffn-noiseless"] {
        let p = make_problem(id).unwrap();
        for &c in &constants {
            let outcomes = [
                witness_lipschitz(&p, c),
                witness_l0l1(&p, c, c),
                witness_noise(&p, NoiseChallenge::Variance(c)),
                witness_noise(&p, NoiseChallenge::ExpectedSmoothness { c0: c, c1: c, c2: c }),
            ];
            for o in outcomes {
                let Ok(WitnessOutcome::Witness(r)) = o else { continue };
                assert!(in_domain(&p, &r.points), "{id}: {r:?}");
                let (lhs, rhs, margin) = r.recompute(&p).unwrap();
                assert!(margin > 0.0, "{id} {:?}: margin {margin}", r.challenge);
                assert_eq!((lhs, rhs, margin), (r.lhs, r.rhs, r.margin));
            }
        }
    }
}

#[test]
fn monte_carlo_moment_examples() {
    let lr = make_problem("linreg").unwrap();
    // E|ḟ| at θ*: |Z ε| = √2 with probability ½
    let m1 = mc_moment(&lr, &[1.0], 1.0, 400_000, 3).unwrap();
    assert!((m1.estimate - std::f64::consts::FRAC_1_SQRT_2).abs() < 4.0 * m1.std_error);
    let lc = make_problem("limit-cycle").unwrap();
    let m = mc_moment(&lc, &[2.0, 0.0], 2.0, 1_000, 0).unwrap();
    assert_eq!(m.std_error, 0.0);
    assert_eq!(m.estimate, lc.moment_bound(&[2.0, 0.0]).unwrap());
}

#[test]
fn classifier_on_engine_runs() {
    let lr = make_problem("linreg").unwrap();
    let t = run_gd(&lr, &ScalarSteps::Constant(0.5), &[5.0], 200, 1).unwrap();
    let c = classify_outcome(&t, &ClassifyConfig::default()).unwrap();
    match c.verdict {
        OutcomeVerdict::Converged { point, terminal_f } => {
            assert!((point[0] - 1.0).abs() < 1e-10);
            assert!((terminal_f - 0.5).abs() < 1e-12);
        }
        v => panic!("{v:?}"),
    }
    // steps of 3 double the distance to θ* every iteration
    let t = run_gd(&lr, &ScalarSteps::Constant(3.0), &[2.0], 200, 1).unwrap();
    let c = classify_outcome(&t, &ClassifyConfig::default()).unwrap();
    assert_eq!(c.verdict, OutcomeVerdict::Diverging);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn holder_estimate_dominates_endpoint_and_grows_with_samples(
        seed in any::<u64>(),
        which in 0usize..4,
        n in 1usize..40,
    ) {
        let id = ["ffn", "rnn", "poisson", "limit-cycle"][which];
        let p = make_problem(id).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = p.test_box().point(&mut rng);
        let phi = p.test_box().point(&mut rng);
        prop_assume!(theta != phi);
        let small = local_holder(&p, &theta, &phi, 1.0, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let large = local_holder(&p, &theta, &phi, 1.0, 2 * n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(small.value >= small.endpoint_ratio);
        prop_assert!(large.value >= small.value);
    }

    #[test]
    fn tau_never_precedes_nu(seed in 0u64..10_000, c in 1.0f64..3.0, theta0 in 0.0f64..1.5) {
        let p = make_problem("poisson").unwrap();
        let s = power_schedule(c, &[0.6], 1).unwrap();
        let t = run_sgd(&p, &s, &[theta0], seed, 150, 1).unwrap();
        let st = detect_stop_times(&p, &t, &StopScan::new(1.0, 0)).unwrap();
        if let Some(tau) = st.tau {
            prop_assert!(st.nu.is_some_and(|nu| nu <= tau));
        }
    }

    #[test]
    fn classifier_fields_support_the_verdict(
        steps in proptest::collection::vec(-1.0f64..1.0, 10..200),
        scale in prop_oneof![Just(1e-6), Just(1.0), Just(1e7)],
        drift in 0.0f64..2.0,
    ) {
        let mut x = 0.0;
        let seq: Vec<Vec<f64>> = steps
            .iter()
            .enumerate()
            .map(|(k, d)| {
                x += scale * (d + drift);
                vec![x, 1e6 * drift * k as f64]
            })
            .collect();
        let pts: Vec<(u64, &[f64], f64)> = seq.iter().enumerate().map(|(k, t)| (k as u64, t.as_slice(), 0.0)).collect();
        let c = classify_points(&pts, &ClassifyConfig::default()).unwrap();
        let converged = c.diameter < c.thresholds.cauchy_tol;
        let diverging = !converged
            && c.min_norm > c.thresholds.norm_floor
            && c.norm_slope > 0.0;
        match c.verdict {
            OutcomeVerdict::Converged { .. } => prop_assert!(converged),
            OutcomeVerdict::Diverging => prop_assert!(diverging),
            OutcomeVerdict::Undecided => prop_assert!(!converged),
        }
        prop_assert_eq!(c.window_len, (0.5 * seq.len() as f64).ceil() as usize);
    }
}
