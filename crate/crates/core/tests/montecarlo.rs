use std::f64::consts::FRAC_PI_4;

use ginprod::montecarlo::{
    expected_real, fit_gamma, Engine, Estimate, ExpectedRealCurve, ExperimentConfig, MonteCarloError,
};
use ginprod::sampling::ginibre_from_rng;
use ginprod::{count_real, SeedSpec};

fn engine() -> Engine {
    Engine::new(None).unwrap()
}

#[test]
fn histogram_invariants() {
    let e = engine();
    for n in [2, 3, 5, 8] {
        let h = e.run_histogram(&ExperimentConfig::new(n, 3, 5_000, 21)).unwrap();
        assert_eq!(h.counts.values().sum::<u64>(), 5_000);
        assert!(h.counts.keys().all(|k| (n - k) % 2 == 0));
        let total: f64 = h.bins().iter().map(|b| b.p_hat).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for b in h.bins() {
            assert_eq!(b.stderr, (b.p_hat * (1.0 - b.p_hat) / 5_000.0).sqrt());
        }
        let (ev, _) = expected_real(&h);
        assert!((0.0..=n as f64).contains(&ev));
        assert_eq!(h.failures, 0);
    }
}

#[test]
fn histogram_keys_cover_parity_valid_k() {
    let e = engine();
    let h = e.run_histogram(&ExperimentConfig::new(8, 1, 100, 0)).unwrap();
    assert_eq!(h.counts.keys().copied().collect::<Vec<_>>(), vec![0, 2, 4, 6, 8]);
    let h = e.run_histogram(&ExperimentConfig::new(3, 1, 100, 0)).unwrap();
    assert_eq!(h.counts.keys().copied().collect::<Vec<_>>(), vec![1, 3]);
}

#[test]
fn results_do_not_depend_on_workers() {
    let cfg = ExperimentConfig::new(4, 3, 9_000, 99);
    let reference = Engine::new(Some(1)).unwrap().run_histogram(&cfg).unwrap();
    for w in [2, 3, 7] {
        assert_eq!(Engine::new(Some(w)).unwrap().run_histogram(&cfg).unwrap(), reference);
    }
    assert!(Engine::new(Some(0)).is_err());
}

#[test]
fn histogram_matches_direct_trial_loop() {
    // trial t draws its K factors in order from stream (seed, t)
    let cfg = ExperimentConfig::new(3, 2, 300, 5);
    let h = engine().run_histogram(&cfg).unwrap();
    let mut counts = [0u64; 4];
    for t in 0..300 {
        let mut rng = SeedSpec::new(5, t).rng();
        let a = ginibre_from_rng(3, &mut rng);
        let b = ginibre_from_rng(3, &mut rng);
        counts[count_real(&(&a * &b)).unwrap()] += 1;
    }
    assert_eq!(h.count(1), counts[1]);
    assert_eq!(h.count(3), counts[3]);
}

#[test]
fn stream_ranges_are_independent() {
    let e = engine();
    let n_trials = 50_000;
    let a = e.run_histogram(&ExperimentConfig::new(3, 2, n_trials, 8)).unwrap();
    let b = e
        .run_histogram(&ExperimentConfig::new(3, 2, n_trials, 8).with_stream_offset(n_trials as u64))
        .unwrap();
    assert_ne!(a.counts, b.counts);
    for k in [1, 3] {
        assert!(a.estimate(k).agrees_with(&b.estimate(k), 4.0), "k {k}");
    }
}

#[test]
fn normalization_does_not_change_counts() {
    let e = engine();
    let plain = ExperimentConfig::new(2, 5, 20_000, 31).with_normalize(false);
    let scaled = plain.clone().with_normalize(true);
    assert_eq!(e.run_histogram(&plain).unwrap().counts, e.run_histogram(&scaled).unwrap().counts);
}

#[test]
fn reduced_discriminant_route_agrees() {
    let e = engine();
    let trials = 100_000;
    let direct = e.run_histogram(&ExperimentConfig::new(2, 2, trials, 41)).unwrap().all_real();
    let reduced = e.p2_22_reduced_mc(trials, 42);
    assert!(direct.agrees_with(&reduced, 4.0), "{direct:?} vs {reduced:?}");
    assert!((reduced.value - FRAC_PI_4).abs() < 4.0 * reduced.stderr);
}

#[test]
fn eigencloud_properties() {
    let e = engine();
    let cfg = ExperimentConfig::new(10, 10, 1_000, 51);
    let cloud = e.eigencloud(&cfg).unwrap();
    assert_eq!(cloud.points.len(), 10 * 1_000);
    assert!(cloud.points.iter().all(|p| p.re.hypot(p.im) <= 1.0 + 1e-12));

    // conjugate symmetry within each trial
    for trial in cloud.points.chunks(10) {
        for p in trial {
            assert!(trial.iter().any(|q| (q.re - p.re).abs() < 1e-9 && (q.im + p.im).abs() < 1e-9));
        }
    }

    let real = cloud.points.iter().filter(|p| p.im.abs() < 1e-9).count() as f64;
    let hist = e.run_histogram(&cfg).unwrap();
    let (ev, se) = expected_real(&hist);
    // same streams, so the counts agree exactly; the 4σ band is the stated contract
    assert!((real / 1_000.0 - ev).abs() <= 4.0 * se);
    assert_eq!(real / 1_000.0, ev);
}

#[test]
fn sub_maximal_counts_peak_then_fall() {
    // Not monotone in K: each k < 8 rises to a peak and then decays. On this
    // grid the k = 6 bin has only just peaked; the explicit product stays
    // accurate for n = 8 up to about K = 20.
    let e = engine();
    let hists = e.sweep_histograms(8, &[1, 5, 10, 20], 20_000, 61, 0).unwrap();
    for k in [0, 2, 4, 6] {
        let p: Vec<Estimate> = hists.iter().map(|h| h.estimate(k)).collect();
        let peak = (0..p.len()).max_by(|&i, &j| p[i].value.total_cmp(&p[j].value)).unwrap();
        for w in p[peak..].windows(2) {
            assert!(w[1].value <= w[0].value + 4.0 * w[0].stderr.hypot(w[1].stderr), "k {k}: {p:?}");
        }
        if k <= 4 {
            assert!(p[3].value < p[0].value, "k {k}: {p:?}");
        }
    }
    let all_real: Vec<f64> = hists.iter().map(|h| h.p_hat(8)).collect();
    assert!(all_real.windows(2).all(|w| w[1] > w[0]), "{all_real:?}");
}

#[test]
fn expected_count_grows_with_k() {
    let curve = engine().sweep_k(4, &(1..=10).collect::<Vec<_>>(), 20_000, 71).unwrap();
    for (w, s) in curve.e_values.windows(2).zip(curve.stderr.windows(2)) {
        assert!(w[1] > w[0] - 4.0 * s[0].hypot(s[1]));
    }
    assert!(curve.e_values[9] > curve.e_values[0]);
}

#[test]
fn gamma_fit_recovers_exact_rate() {
    let k_values: Vec<usize> = (1..=8).collect();
    let curve = ExpectedRealCurve {
        n: 3,
        e_values: k_values.iter().map(|&k| 3.0 - (-0.5 * k as f64).exp()).collect(),
        stderr: vec![0.0; 8],
        k_values,
    };
    let fit = fit_gamma(&curve).unwrap();
    assert!((fit.gamma - 0.5).abs() < 1e-10);
    assert!(fit.intercept.abs() < 1e-10);
    assert!(fit.rms_residual < 1e-10);
    assert_eq!((fit.k_min, fit.k_max, fit.points_used), (1, 8, 8));
}

#[test]
fn gamma_fit_skips_saturated_points() {
    let curve = ExpectedRealCurve {
        n: 2,
        k_values: vec![1, 2, 3, 4],
        e_values: vec![1.5, 1.8, 1.999, 2.0],
        stderr: vec![0.01, 0.01, 0.01, 0.0],
    };
    assert!(matches!(fit_gamma(&curve), Err(MonteCarloError::TooFewFitPoints(2))));
}

#[test]
fn sweep_rejects_bad_k_lists() {
    let e = engine();
    assert!(e.sweep_k(2, &[], 10, 0).is_err());
    assert!(e.sweep_k(2, &[3, 2], 10, 0).is_err());
    assert!(e.sweep_k(2, &[2, 2], 10, 0).is_err());
}

#[test]
fn sweep_uses_disjoint_streams() {
    let e = engine();
    let hists = e.sweep_histograms(2, &[1, 2], 1_000, 3, 0).unwrap();
    assert_eq!(hists[0].config.stream_offset, 0);
    assert_eq!(hists[1].config.stream_offset, 1_000);
    let single = e.sweep_k(2, &[1], 1_000, 3).unwrap();
    assert_eq!(single.k_values, vec![1]);
}

#[test]
fn over_budget_is_rejected() {
    let cfg = ExperimentConfig::new(500, 100, 1_000_000, 0);
    assert!(matches!(engine().run_histogram(&cfg), Err(MonteCarloError::OverBudget { .. })));
}
