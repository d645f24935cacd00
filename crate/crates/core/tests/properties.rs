use fama_core::*;
use proptest::prelude::*;

fn small_blocks(n: usize, w: f64, delta: f64) -> BlockStructure {
    CorrelationSpec::jakes(n, w)
        .block_structure(delta, 1.0)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn outage_is_a_probability_and_grows_with_threshold(
        users in 2usize..6,
        m in 1u32..4,
        n in 2usize..30,
        w in 0.2f64..3.0,
        delta in 0.9f64..0.99,
        g_db in -12.0f64..12.0,
    ) {
        let blocks = small_blocks(n, w, delta);
        let lo = SystemConfig::homogeneous(users, m, db_to_linear(g_db), n, w).unwrap();
        let hi = lo.with_gamma(db_to_linear(g_db + 2.0));
        for cfg in [&lo, &hi] {
            for v in [
                op_slow_exact(cfg, &blocks, 1e-8).unwrap().value,
                op_slow_quadrature(cfg, &blocks, 20, 20).unwrap().value,
                op_slow_upper_bound(cfg, &blocks).unwrap().value,
                op_fast(cfg, &blocks, FastMethod::UpperBound).unwrap().value,
            ] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
        let a = op_slow_exact(&lo, &blocks, 1e-9).unwrap().value;
        let b = op_slow_exact(&hi, &blocks, 1e-9).unwrap().value;
        prop_assert!(b >= a * (1.0 - 1e-7), "{a} -> {b}");
        let fa = op_fast(&lo, &blocks, FastMethod::ExactIntegral { rel_tol: 1e-9 }).unwrap().value;
        let fb = op_fast(&hi, &blocks, FastMethod::ExactIntegral { rel_tol: 1e-9 }).unwrap().value;
        prop_assert!(fb >= fa * (1.0 - 1e-7), "{fa} -> {fb}");
    }

    #[test]
    fn bound_dominates_exact(
        users in 2usize..8,
        m in 1u32..4,
        n in 2usize..60,
        w in 0.2f64..3.0,
        delta in 0.9f64..0.995,
        g_db in -10.0f64..10.0,
    ) {
        let blocks = small_blocks(n, w, delta);
        let cfg = SystemConfig::homogeneous(users, m, db_to_linear(g_db), n, w).unwrap();
        let exact = op_slow_exact(&cfg, &blocks, 1e-9).unwrap().value;
        let ub = op_slow_upper_bound(&cfg, &blocks).unwrap().value;
        prop_assert!(ub >= exact * (1.0 - 1e-7), "{ub} < {exact}");
    }

    #[test]
    fn sir_is_scale_free(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let blocks = small_blocks(12, 1.0, 0.97);
        let cfg = SystemConfig::homogeneous(3, 2, 1.0, 12, 1.0).unwrap();
        let mut rng = montecarlo::trial_rng(seed, 0);
        let t = sample_trial(&cfg, &blocks, McMode::Slow, &mut rng).unwrap();
        let scaled = TrialBatch {
            desired_power: t.desired_power.iter().map(|x| x * scale).collect(),
            interference_power: t.interference_power.iter().map(|x| x * scale).collect(),
            block_map: t.block_map.clone(),
        };
        let (a, b) = (t.max_sir(), scaled.max_sir());
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }
}

#[test]
fn heterogeneous_interferers_match_monte_carlo() {
    let blocks = small_blocks(20, 1.0, 0.97);
    let cfg = SystemConfig::new(4, 2, vec![1, 3, 2], db_to_linear(-3.0), 20, 1.0).unwrap();
    let exact = op_slow_exact(&cfg, &blocks, 1e-8).unwrap().value;
    let trials = 200_000;
    let mc = estimate_op(&cfg, &blocks, &McSettings::new(trials, 3, McMode::Slow)).unwrap();
    let se = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!(
        (mc.value - exact).abs() <= 4.0 * se,
        "exact {exact} mc {}",
        mc.value
    );

    let fast = op_fast(&cfg, &blocks, FastMethod::ExactIntegral { rel_tol: 1e-8 }).unwrap();
    let approx = estimate_op(
        &cfg,
        &blocks,
        &McSettings::new(trials, 3, McMode::FastNakagamiApprox),
    )
    .unwrap();
    let se = (fast.value * (1.0 - fast.value) / trials as f64).sqrt();
    assert!(
        (approx.value - fast.value).abs() <= 4.0 * se,
        "fast {} mc {}",
        fast.value,
        approx.value
    );
}

#[test]
fn standard_error_shrinks_with_root_trials() {
    let blocks = small_blocks(10, 1.0, 0.97);
    let cfg = SystemConfig::homogeneous(3, 1, db_to_linear(3.0), 10, 1.0).unwrap();
    let small = estimate_op(&cfg, &blocks, &McSettings::new(10_000, 5, McMode::Slow)).unwrap();
    let large = estimate_op(&cfg, &blocks, &McSettings::new(1_000_000, 5, McMode::Slow)).unwrap();
    let ratio = small.error / large.error;
    assert!((ratio - 10.0).abs() < 1.0, "SE ratio {ratio}");
    assert!((small.value - large.value).abs() <= 4.0 * small.error);
}

#[test]
fn fast_mode_gain_meets_or_beats_slow_mode() {
    let blocks = small_blocks(100, 1.0, 0.97);
    for users in [2, 5, 10, 20, 30] {
        let cfg = SystemConfig::homogeneous(users, 2, db_to_linear(-3.0), 100, 1.0).unwrap();
        let slow = op_slow_quadrature(&cfg, &blocks, 50, 50).unwrap().value;
        let fast = op_fast(&cfg, &blocks, FastMethod::Quadrature { n_i: 50, n_j: 50 })
            .unwrap()
            .value;
        assert!(
            mux_gain(users, fast) >= mux_gain(users, slow) - 1e-12,
            "U={users}"
        );
    }
}
