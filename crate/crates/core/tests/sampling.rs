use std::f64::consts::{FRAC_PI_4, PI};

use ginprod::sampling::{
    ginibre_real, ks_statistic, sample_s3, sample_theta, singular_values_2x2_distribution_check, top_gram_eigenvalue_cdf,
    SamplingError,
};
use ginprod::{SeedSpec, ThetaPoint};
use proptest::prelude::*;

const DRAWS: u64 = 100_000;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn ginibre_entries_are_standard_normal() {
    let entries: Vec<f64> = (0..DRAWS)
        .map(|t| ginibre_real(2, SeedSpec::new(11, t)).unwrap()[(0, 0)])
        .collect();
    let (mean, var) = mean_var(&entries);
    assert!(mean.abs() < 4.0 / (DRAWS as f64).sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 0.02, "var {var}");
}

#[test]
fn ginibre_entries_are_uncorrelated() {
    let draws: Vec<Vec<f64>> = (0..DRAWS)
        .map(|t| ginibre_real(3, SeedSpec::new(12, t)).unwrap().as_slice().to_vec())
        .collect();
    let bound = 4.0 / (DRAWS as f64).sqrt();
    for (i, j) in [(0, 1), (0, 4), (2, 6), (3, 8), (7, 8)] {
        let xi: Vec<f64> = draws.iter().map(|d| d[i]).collect();
        let xj: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        let (mi, vi) = mean_var(&xi);
        let (mj, vj) = mean_var(&xj);
        let cov = xi.iter().zip(&xj).map(|(a, b)| (a - mi) * (b - mj)).sum::<f64>() / (DRAWS as f64 - 1.0);
        let corr = cov / (vi * vj).sqrt();
        assert!(corr.abs() < bound, "entries {i},{j}: {corr}");
    }
}

#[test]
fn zero_dimension_is_rejected() {
    assert_eq!(ginibre_real(0, SeedSpec::new(0, 0)), Err(SamplingError::InvalidDimension(0)));
}

#[test]
fn s3_moments() {
    let states: Vec<[f64; 4]> = (0..DRAWS).map(|t| sample_s3(SeedSpec::new(13, t)).amplitudes()).collect();
    for s in &states {
        assert!((s.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let mean_bound = 4.0 * 0.5 / (DRAWS as f64).sqrt();
    for i in 0..4 {
        let xs: Vec<f64> = states.iter().map(|s| s[i]).collect();
        let (mean, _) = mean_var(&xs);
        let second = xs.iter().map(|x| x * x).sum::<f64>() / DRAWS as f64;
        assert!(mean.abs() < mean_bound, "amplitude {i} mean {mean}");
        assert!((second - 0.25).abs() < 0.01, "amplitude {i} second moment {second}");
    }
}

#[test]
fn theta_sampler_fixed_points() {
    assert_eq!(ThetaPoint::from_uniform(0.0).unwrap().theta, 0.0);
    assert_eq!(ThetaPoint::from_uniform(1.0).unwrap().theta, FRAC_PI_4);
    assert!((ThetaPoint::from_uniform(0.5).unwrap().theta - PI / 12.0).abs() < 1e-15);
    assert!(ThetaPoint::from_uniform(1.5).is_err());
    assert!(ThetaPoint::new(1.0).is_err());
}

#[test]
fn theta_sampler_ks_and_mean() {
    let thetas: Vec<f64> = (0..DRAWS).map(|t| sample_theta(SeedSpec::new(14, t)).theta).collect();
    let mut copy = thetas.clone();
    let d = ks_statistic(&mut copy, |t| (2.0 * t).sin());
    assert!(d < 1.63 / (DRAWS as f64).sqrt(), "KS {d}");

    // E[sin 2θ] = ∫ sin 2θ · 2 cos 2θ dθ = 1/2, Var = 1/3 − 1/4
    let s: Vec<f64> = thetas.iter().map(|t| (2.0 * t).sin()).collect();
    let (mean, _) = mean_var(&s);
    let sigma = (1.0f64 / 12.0 / DRAWS as f64).sqrt();
    assert!((mean - 0.5).abs() < 4.0 * sigma, "mean {mean}");
}

#[test]
fn singular_value_distribution() {
    assert!((top_gram_eigenvalue_cdf(0.5)).abs() < 1e-15);
    assert_eq!(top_gram_eigenvalue_cdf(1.0), 1.0);
    let d = singular_values_2x2_distribution_check(DRAWS as usize, 15).unwrap();
    assert!(d < 1.63 / (DRAWS as f64).sqrt(), "KS {d}");
    assert!(matches!(
        singular_values_2x2_distribution_check(999, 0),
        Err(SamplingError::TooFewTrials { .. })
    ));
}

proptest! {
    #[test]
    fn reproducible_streams(master in any::<u64>(), stream in any::<u64>(), n in 1usize..6) {
        let s = SeedSpec::new(master, stream);
        prop_assert_eq!(ginibre_real(n, s).unwrap(), ginibre_real(n, s).unwrap());
        prop_assert_eq!(sample_s3(s).amplitudes(), sample_s3(s).amplitudes());
        prop_assert_eq!(sample_theta(s), sample_theta(s));
    }

    #[test]
    fn theta_point_invariants(theta in 0.0f64..=FRAC_PI_4) {
        let t = ThetaPoint::new(theta).unwrap();
        prop_assert!(t.beta >= 1.0);
        prop_assert!((0.0..=2.0).contains(&t.density));
    }
}
