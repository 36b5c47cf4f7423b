//! Seedable sampling of Ginibre matrices, uniform states on S³ and the
//! Schmidt-angle measure.
//!
//! Every draw comes from a ChaCha8 stream keyed on `(master_seed, stream_id)`:
//! the 64-bit master seed fixes the key and the stream id selects ChaCha's
//! 64-bit stream (nonce). A trial's draws therefore depend only on its own
//! stream id, not on which worker runs it or in what order. Normal variates
//! use the ziggurat sampler from `rand_distr`; outputs are bit-reproducible
//! for a given build of this crate and its locked dependencies.

use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entanglement::TwoQubitRealState;
use crate::linalg::MatrixR;

/// Random stream type shared by all samplers.
pub type StreamRng = ChaCha8Rng;

/// Squared-norm floor below which a Gaussian 4-vector is redrawn.
pub const S3_UNDERFLOW_FLOOR: f64 = 1e-100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("invalid dimension {0}; need n >= 1")]
    InvalidDimension(usize),
    #[error("theta = {0} outside [0, pi/4]")]
    ThetaOutOfRange(f64),
    #[error("uniform variate {0} outside [0, 1]")]
    UniformOutOfRange(f64),
    #[error("need at least {min} trials, got {got}")]
    TooFewTrials { min: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// A Schmidt angle with its derived `β = 1/sin 2θ` and density `μ(θ) = 2 cos 2θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaPoint {
    pub theta: f64,
    pub beta: f64,
    pub density: f64,
}

impl ThetaPoint {
    pub fn new(theta: f64) -> Result<Self, SamplingError> {
        if !(0.0..=FRAC_PI_4).contains(&theta) {
            return Err(SamplingError::ThetaOutOfRange(theta));
        }
        let s = (2.0 * theta).sin();
        // sin(2·fl(π/4)) rounds to 1, so β = 1 exactly there
        let beta = if s == 0.0 { f64::INFINITY } else { 1.0 / s };
        Ok(ThetaPoint {
            theta,
            beta,
            density: 2.0 * (2.0 * theta).cos(),
        })
    }

    /// Inverse CDF of `μ`: the CDF is `sin 2θ`, so `θ = ½ arcsin u`.
    pub fn from_uniform(u: f64) -> Result<Self, SamplingError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(SamplingError::UniformOutOfRange(u));
        }
        Self::new((0.5 * u.asin()).min(FRAC_PI_4))
    }

    /// `sin 2θ`, the concurrence of `cos θ|00⟩ + sin θ|11⟩`.
    pub fn sin2(&self) -> f64 {
        (2.0 * self.theta).sin()
    }
}

/// Fills an `n x n` matrix with standard normals drawn from `rng`, row by row.
pub fn ginibre_from_rng<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MatrixR {
    let mut m = MatrixR::zeros(n);
    fill_standard_normal(m.as_mut_slice(), rng);
    m
}

pub(crate) fn fill_standard_normal<R: Rng + ?Sized>(out: &mut [f64], rng: &mut R) {
    for x in out {
        *x = rng.sample(StandardNormal);
    }
}

pub fn ginibre_real(n: usize, seed: SeedSpec) -> Result<MatrixR, SamplingError> {
    if n == 0 {
        return Err(SamplingError::InvalidDimension(n));
    }
    Ok(ginibre_from_rng(n, &mut seed.rng()))
}

/// Uniform point on S³: a normalised Gaussian 4-vector.
pub fn s3_from_rng<R: Rng + ?Sized>(rng: &mut R) -> TwoQubitRealState {
    loop {
        let mut v = [0.0; 4];
        fill_standard_normal(&mut v, rng);
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        if norm2 < S3_UNDERFLOW_FLOOR {
            continue;
        }
        let inv = 1.0 / norm2.sqrt();
        return TwoQubitRealState::from_normalized([v[0] * inv, v[1] * inv, v[2] * inv, v[3] * inv]);
    }
}

pub fn sample_s3(seed: SeedSpec) -> TwoQubitRealState {
    s3_from_rng(&mut seed.rng())
}

pub fn theta_from_rng<R: Rng + ?Sized>(rng: &mut R) -> ThetaPoint {
    let u: f64 = rng.random();
    ThetaPoint::from_uniform(u).expect("uniform variate in [0, 1)")
}

pub fn sample_theta(seed: SeedSpec) -> ThetaPoint {
    theta_from_rng(&mut seed.rng())
}

/// Haar-random orthogonal matrix: QR of a Ginibre matrix with the signs of
/// `R`'s diagonal folded into `Q`.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MatrixR {
    let g = ginibre_from_rng(n, rng);
    let qr = DMatrix::from_row_slice(n, n, g.as_slice()).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = MatrixR::zeros(n);
    for j in 0..n {
        let sign = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            out[(i, j)] = sign * q[(i, j)];
        }
    }
    out
}

/// Larger eigenvalue of `AAᵀ / tr(AAᵀ)` for a 2×2 matrix `A`; always in `[½, 1]`.
pub fn normalized_top_gram_eigenvalue(a: &MatrixR) -> f64 {
    debug_assert_eq!(a.dim(), 2);
    let p = a[(0, 0)] * a[(0, 0)] + a[(0, 1)] * a[(0, 1)];
    let s = a[(1, 0)] * a[(1, 0)] + a[(1, 1)] * a[(1, 1)];
    let r = a[(0, 0)] * a[(1, 0)] + a[(0, 1)] * a[(1, 1)];
    let half_gap = (0.25 * (p - s) * (p - s) + r * r).sqrt();
    (0.5 + half_gap / (p + s)).min(1.0)
}

/// CDF of the larger normalised Gram eigenvalue, density `(2λ−1)/√(λ(1−λ))`
/// on `[½, 1]`: `F(λ) = 1 − 2√(λ(1−λ))`.
pub fn top_gram_eigenvalue_cdf(lambda: f64) -> f64 {
    if lambda <= 0.5 {
        0.0
    } else if lambda >= 1.0 {
        1.0
    } else {
        1.0 - 2.0 * (lambda * (1.0 - lambda)).sqrt()
    }
}

/// One-sample Kolmogorov–Smirnov distance `sup |F_n − F|`. Sorts `samples`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i as f64 + 1.0) / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// KS distance between sampled `λ = max eig(AAᵀ)/tr(AAᵀ)` over 2×2 Ginibre
/// draws (trial `t` on stream `(master_seed, t)`) and the analytic law.
pub fn singular_values_2x2_distribution_check(trials: usize, master_seed: u64) -> Result<f64, SamplingError> {
    const MIN_TRIALS: usize = 1000;
    if trials < MIN_TRIALS {
        return Err(SamplingError::TooFewTrials {
            min: MIN_TRIALS,
            got: trials,
        });
    }
    let mut lambdas: Vec<f64> = (0..trials as u64)
        .map(|t| {
            let a = ginibre_from_rng(2, &mut SeedSpec::new(master_seed, t).rng());
            normalized_top_gram_eigenvalue(&a)
        })
        .collect();
    Ok(ks_statistic(&mut lambdas, top_gram_eigenvalue_cdf))
}
