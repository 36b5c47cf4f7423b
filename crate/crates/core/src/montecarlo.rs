//! Parallel, reproducible Monte Carlo over products of real Ginibre matrices.
//!
//! Trial `t` of an experiment draws all of its factors from the stream
//! `(master_seed, stream_offset + t)`. Trials are grouped into fixed-size
//! blocks, each block is reduced to an integer count vector, and blocks are
//! merged by integer addition, so results do not depend on the worker count
//! or on scheduling. A trial whose eigensolve fails is redrawn from the
//! reserved stream `2⁶³ + stream_offset + t`, which no regular trial uses.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{count_real, eigenvalues, matmul_into, LinalgError, MatrixR};
use crate::sampling::{fill_standard_normal, normalized_top_gram_eigenvalue, ginibre_from_rng, SeedSpec, StreamRng, ThetaPoint};

/// Trials per work block.
pub const BLOCK_TRIALS: usize = 2048;
/// Stream ids at or above this value are reserved for resampling failed trials.
pub const RESAMPLE_STREAM_BASE: u64 = 1 << 63;
/// Resample attempts per failed trial before giving up.
pub const MAX_RESAMPLES: usize = 16;
/// Largest admissible failure tally as a fraction of trials.
pub const MAX_FAILURE_FRACTION: f64 = 1e-4;
/// Upper bound on `trials · K · n³`.
pub const WORK_BUDGET: f64 = 1e13;
/// Chains longer than this get per-factor normalisation by default.
pub const AUTO_NORMALIZE_ABOVE_K: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("work estimate {work:.3e} exceeds the budget {budget:.1e} (trials * K * n^3)")]
    OverBudget { work: f64, budget: f64 },
    #[error("trial {trial} failed {attempts} resample attempts: {source}")]
    TrialFailed {
        trial: u64,
        attempts: usize,
        source: LinalgError,
    },
    #[error("{failures} eigensolve failures in {trials} trials exceeds the allowed fraction {MAX_FAILURE_FRACTION:e}")]
    TooManyFailures { failures: u64, trials: usize },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error("gamma fit needs at least 3 unsaturated points, found {0}")]
    TooFewFitPoints(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k_factors: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Divide each factor by its Frobenius norm before multiplying.
    pub normalize_factors: bool,
    /// First stream id; trial `t` uses `stream_offset + t`.
    pub stream_offset: u64,
}

impl ExperimentConfig {
    /// Config with per-factor normalisation on iff `k_factors > 20`.
    pub fn new(n: usize, k_factors: usize, trials: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            n,
            k_factors,
            trials,
            master_seed,
            normalize_factors: k_factors > AUTO_NORMALIZE_ABOVE_K,
            stream_offset: 0,
        }
    }

    pub fn with_normalize(mut self, on: bool) -> Self {
        self.normalize_factors = on;
        self
    }

    pub fn with_stream_offset(mut self, offset: u64) -> Self {
        self.stream_offset = offset;
        self
    }

    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.n == 0 {
            return Err(MonteCarloError::InvalidConfig("n must be >= 1".into()));
        }
        if self.k_factors == 0 {
            return Err(MonteCarloError::InvalidConfig("K must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(MonteCarloError::InvalidConfig("trials must be >= 1".into()));
        }
        let last = self.stream_offset.checked_add(self.trials as u64);
        if last.is_none_or(|s| s > RESAMPLE_STREAM_BASE) {
            return Err(MonteCarloError::InvalidConfig(
                "stream range overlaps the reserved resample streams".into(),
            ));
        }
        let work = self.trials as f64 * self.k_factors as f64 * (self.n as f64).powi(3);
        if work > WORK_BUDGET {
            return Err(MonteCarloError::OverBudget {
                work,
                budget: WORK_BUDGET,
            });
        }
        Ok(())
    }
}

/// A binomial proportion with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl Estimate {
    pub fn binomial(successes: u64, trials: usize) -> Self {
        let p = successes as f64 / trials as f64;
        Estimate {
            value: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }

    /// `|self − other| ≤ nsigma · √(σ₁² + σ₂²)`.
    pub fn agrees_with(&self, other: &Estimate, nsigma: f64) -> bool {
        (self.value - other.value).abs() <= nsigma * self.stderr.hypot(other.stderr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub k: usize,
    pub count: u64,
    pub p_hat: f64,
    pub stderr: f64,
}

/// Estimated `p^(K)_{n,k}` over the parity-valid `k ≡ n (mod 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealCountHistogram {
    pub config: ExperimentConfig,
    pub counts: BTreeMap<usize, u64>,
    /// Trials that needed at least one resample.
    pub failures: u64,
}

impl RealCountHistogram {
    fn from_raw(config: ExperimentConfig, raw: &[u64], failures: u64) -> Self {
        let n = config.n;
        debug_assert!(raw.iter().enumerate().all(|(k, &c)| c == 0 || (n - k) % 2 == 0));
        let counts = (0..=n).filter(|k| (n - k) % 2 == 0).map(|k| (k, raw[k])).collect();
        RealCountHistogram {
            config,
            counts,
            failures,
        }
    }

    pub fn trials(&self) -> usize {
        self.config.trials
    }

    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    pub fn p_hat(&self, k: usize) -> f64 {
        self.count(k) as f64 / self.trials() as f64
    }

    /// `√(p̂(1 − p̂)/trials)`.
    pub fn stderr(&self, k: usize) -> f64 {
        let p = self.p_hat(k);
        (p * (1.0 - p) / self.trials() as f64).sqrt()
    }

    pub fn estimate(&self, k: usize) -> Estimate {
        Estimate::binomial(self.count(k), self.trials())
    }

    /// Probability that all eigenvalues are real.
    pub fn all_real(&self) -> Estimate {
        self.estimate(self.config.n)
    }

    pub fn bins(&self) -> Vec<HistogramBin> {
        self.counts
            .iter()
            .map(|(&k, &count)| HistogramBin {
                k,
                count,
                p_hat: self.p_hat(k),
                stderr: self.stderr(k),
            })
            .collect()
    }
}

/// `E = Σ k p̂_k` and the standard error from the sample variance of `k`.
pub fn expected_real(hist: &RealCountHistogram) -> (f64, f64) {
    expected_from_counts(hist.counts.iter().map(|(&k, &c)| (k, c)), hist.trials())
}

fn expected_from_counts(counts: impl Iterator<Item = (usize, u64)>, trials: usize) -> (f64, f64) {
    let t = trials as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for (k, c) in counts {
        let (k, c) = (k as f64, c as f64);
        s1 += k * c;
        s2 += k * k * c;
    }
    let mean = s1 / t;
    if trials < 2 {
        return (mean, 0.0);
    }
    let var = ((s2 - t * mean * mean) / (t - 1.0)).max(0.0);
    (mean, (var / t).sqrt())
}

/// `E_n^(K)` over a list of `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRealCurve {
    pub n: usize,
    pub k_values: Vec<usize>,
    pub e_values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl ExpectedRealCurve {
    pub fn from_histograms(n: usize, hists: &[RealCountHistogram]) -> Self {
        let mut curve = ExpectedRealCurve {
            n,
            k_values: Vec::with_capacity(hists.len()),
            e_values: Vec::with_capacity(hists.len()),
            stderr: Vec::with_capacity(hists.len()),
        };
        for h in hists {
            let (e, se) = expected_real(h);
            curve.k_values.push(h.config.k_factors);
            curve.e_values.push(e);
            curve.stderr.push(se);
        }
        curve
    }
}

/// Least-squares fit of `ln(n − E) = intercept − γ K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub n: usize,
    pub gamma: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub points_used: usize,
}

/// Fits the exponential approach of `E_n^(K)` to `n`, skipping points with
/// `n − E ≤ 3·stderr`.
pub fn fit_gamma(curve: &ExpectedRealCurve) -> Result<GammaFit, MonteCarloError> {
    let n = curve.n as f64;
    let pts: Vec<(usize, f64)> = curve
        .k_values
        .iter()
        .zip(&curve.e_values)
        .zip(&curve.stderr)
        .filter(|&((_, &e), &se)| n - e > 3.0 * se && n - e > 0.0)
        .map(|((&k, &e), _)| (k, (n - e).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(MonteCarloError::TooFewFitPoints(pts.len()));
    }
    let m = pts.len() as f64;
    let kx = pts.iter().map(|&(k, _)| k as f64).sum::<f64>() / m;
    let ly = pts.iter().map(|&(_, y)| y).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(k, y) in &pts {
        let dx = k as f64 - kx;
        sxy += dx * (y - ly);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return Err(MonteCarloError::TooFewFitPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = ly - slope * kx;
    let rms = (pts
        .iter()
        .map(|&(k, y)| (y - (intercept + slope * k as f64)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(GammaFit {
        n: curve.n,
        gamma: -slope,
        intercept,
        rms_residual: rms,
        k_min: pts.iter().map(|p| p.0).min().unwrap_or(0),
        k_max: pts.iter().map(|p| p.0).max().unwrap_or(0),
        points_used: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub trial: u64,
    pub re: f64,
    pub im: f64,
}

/// Eigenvalues of each trial's product divided by the product's Frobenius norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigCloud {
    pub config: ExperimentConfig,
    pub points: Vec<CloudPoint>,
    pub failures: u64,
}

struct ChainScratch {
    acc: MatrixR,
    factor: MatrixR,
    tmp: MatrixR,
}

impl ChainScratch {
    fn new(n: usize) -> Self {
        ChainScratch {
            acc: MatrixR::zeros(n),
            factor: MatrixR::zeros(n),
            tmp: MatrixR::zeros(n),
        }
    }

    /// Draws `K` factors from `rng` and leaves their ordered product in `acc`.
    fn draw_product<R: Rng + ?Sized>(&mut self, cfg: &ExperimentConfig, rng: &mut R) -> &MatrixR {
        fill_standard_normal(self.acc.as_mut_slice(), rng);
        if cfg.normalize_factors {
            let nrm = self.acc.frobenius_norm();
            self.acc.scale_in_place(1.0 / nrm);
        }
        for _ in 1..cfg.k_factors {
            fill_standard_normal(self.factor.as_mut_slice(), rng);
            if cfg.normalize_factors {
                let nrm = self.factor.frobenius_norm();
                self.factor.scale_in_place(1.0 / nrm);
            }
            matmul_into(&self.acc, &self.factor, &mut self.tmp);
            std::mem::swap(&mut self.acc, &mut self.tmp);
        }
        &self.acc
    }
}

/// Runs `op` on the trial's regular stream, then on its reserved resample
/// stream until it succeeds. Returns the value and whether a resample happened.
fn with_resample<T>(
    cfg: &ExperimentConfig,
    trial: u64,
    mut op: impl FnMut(&mut StreamRng) -> Result<T, LinalgError>,
) -> Result<(T, bool), MonteCarloError> {
    let id = cfg.stream_offset + trial;
    let mut rng = SeedSpec::new(cfg.master_seed, id).rng();
    let mut last_err = match op(&mut rng) {
        Ok(v) => return Ok((v, false)),
        Err(e) => e,
    };
    let mut rng = SeedSpec::new(cfg.master_seed, RESAMPLE_STREAM_BASE + id).rng();
    for _ in 0..MAX_RESAMPLES {
        match op(&mut rng) {
            Ok(v) => return Ok((v, true)),
            Err(e) => last_err = e,
        }
    }
    Err(MonteCarloError::TrialFailed {
        trial,
        attempts: MAX_RESAMPLES,
        source: last_err,
    })
}

fn block_ranges(trials: usize) -> impl IndexedParallelIterator<Item = std::ops::Range<u64>> {
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    (0..blocks).into_par_iter().map(move |b| {
        let start = (b * BLOCK_TRIALS) as u64;
        let end = ((b + 1) * BLOCK_TRIALS).min(trials) as u64;
        start..end
    })
}

/// Worker pool for the Monte Carlo engine.
///
/// `max_workers` caps the number of threads; results never depend on it.
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    /// `None` uses one worker per available core.
    pub fn new(max_workers: Option<usize>) -> Result<Self, MonteCarloError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = max_workers {
            if w == 0 {
                return Err(MonteCarloError::InvalidConfig("worker count must be >= 1".into()));
            }
            builder = builder.num_threads(w);
        }
        let pool = builder.build().map_err(|e| MonteCarloError::Pool(e.to_string()))?;
        Ok(Engine { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Number of trials `t ∈ [0, trials)` for which `trial` returns true, with
    /// trial `t` drawing from stream `(master_seed, stream_offset + t)`.
    pub fn count_successes<F>(&self, trials: usize, master_seed: u64, stream_offset: u64, trial: F) -> u64
    where
        F: Fn(&mut StreamRng) -> bool + Sync,
    {
        self.pool.install(|| {
            block_ranges(trials)
                .map(|range| {
                    range
                        .filter(|&t| trial(&mut SeedSpec::new(master_seed, stream_offset + t).rng()))
                        .count() as u64
                })
                .sum()
        })
    }

    pub fn run_histogram(&self, cfg: &ExperimentConfig) -> Result<RealCountHistogram, MonteCarloError> {
        cfg.validate()?;
        let n = cfg.n;
        let (raw, failures) = self.pool.install(|| {
            block_ranges(cfg.trials)
                .map(|range| -> Result<(Vec<u64>, u64), MonteCarloError> {
                    let mut counts = vec![0u64; n + 1];
                    let mut failures = 0u64;
                    let mut scratch = ChainScratch::new(n);
                    for t in range {
                        let (k, resampled) = with_resample(cfg, t, |rng| count_real(scratch.draw_product(cfg, rng)))?;
                        counts[k] += 1;
                        failures += resampled as u64;
                    }
                    Ok((counts, failures))
                })
                .try_reduce(
                    || (vec![0u64; n + 1], 0),
                    |(mut a, fa), (b, fb)| {
                        a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                        Ok((a, fa + fb))
                    },
                )
        })?;
        if failures as f64 > MAX_FAILURE_FRACTION * cfg.trials as f64 {
            return Err(MonteCarloError::TooManyFailures {
                failures,
                trials: cfg.trials,
            });
        }
        Ok(RealCountHistogram::from_raw(cfg.clone(), &raw, failures))
    }

    /// One histogram per `K`, each on its own disjoint block of streams:
    /// the `i`-th entry of `k_list` uses offset `stream_offset + i · trials`.
    pub fn sweep_histograms(
        &self,
        n: usize,
        k_list: &[usize],
        trials: usize,
        master_seed: u64,
        stream_offset: u64,
    ) -> Result<Vec<RealCountHistogram>, MonteCarloError> {
        if k_list.is_empty() {
            return Err(MonteCarloError::InvalidConfig("K list is empty".into()));
        }
        if k_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MonteCarloError::InvalidConfig("K list must be strictly ascending".into()));
        }
        k_list
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let cfg = ExperimentConfig::new(n, k, trials, master_seed)
                    .with_stream_offset(stream_offset + (i * trials) as u64);
                self.run_histogram(&cfg)
            })
            .collect()
    }

    pub fn sweep_k(&self, n: usize, k_list: &[usize], trials: usize, master_seed: u64) -> Result<ExpectedRealCurve, MonteCarloError> {
        let hists = self.sweep_histograms(n, k_list, trials, master_seed, 0)?;
        Ok(ExpectedRealCurve::from_histograms(n, &hists))
    }

    pub fn eigencloud(&self, cfg: &ExperimentConfig) -> Result<EigCloud, MonteCarloError> {
        cfg.validate()?;
        let n = cfg.n;
        let blocks: Vec<(Vec<CloudPoint>, u64)> = self.pool.install(|| {
            block_ranges(cfg.trials)
                .map(|range| -> Result<(Vec<CloudPoint>, u64), MonteCarloError> {
                    let mut pts = Vec::with_capacity(range.clone().count() * n);
                    let mut failures = 0;
                    let mut scratch = ChainScratch::new(n);
                    for t in range {
                        let (spec, resampled) = with_resample(cfg, t, |rng| {
                            let p = scratch.draw_product(cfg, rng);
                            let norm = p.frobenius_norm();
                            eigenvalues(p).map(|s| (s, norm))
                        })?;
                        failures += resampled as u64;
                        let (spec, norm) = spec;
                        pts.extend(spec.eigenvalues.iter().map(|z| CloudPoint {
                            trial: t,
                            re: z.re / norm,
                            im: z.im / norm,
                        }));
                    }
                    Ok((pts, failures))
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        let failures = blocks.iter().map(|b| b.1).sum();
        let points = blocks.into_iter().flat_map(|b| b.0).collect();
        Ok(EigCloud {
            config: cfg.clone(),
            points,
            failures,
        })
    }

    /// Estimate of `p_θ` from the sign of
    /// `Δ₂ = (a cos θ − d sin θ)² + 2 sin 2θ · bc` with `a, b, c, d ~ N(0, 1)`.
    pub fn p_theta_mc(&self, theta: ThetaPoint, trials: usize, master_seed: u64) -> Estimate {
        let (s, c) = theta.theta.sin_cos();
        let s2 = theta.sin2();
        let hits = self.count_successes(trials, master_seed, 0, |rng| {
            let mut v = [0.0; 4];
            fill_standard_normal(&mut v, rng);
            reduced_discriminant(c, s, s2, v) >= 0.0
        });
        Estimate::binomial(hits, trials)
    }

    /// `p⁽²⁾₂,₂` by the reduced route: `θ` from the singular values of a first
    /// Ginibre factor (`cos² θ = σ₁²/(σ₁² + σ₂²)`), then the `Δ₂` sign test on
    /// a fresh Gaussian second factor.
    pub fn p2_22_reduced_mc(&self, trials: usize, master_seed: u64) -> Estimate {
        let hits = self.count_successes(trials, master_seed, 0, |rng| {
            let a1 = ginibre_from_rng(2, rng);
            let lambda = normalized_top_gram_eigenvalue(&a1);
            let theta = lambda.sqrt().acos();
            let (s, c) = theta.sin_cos();
            let mut v = [0.0; 4];
            fill_standard_normal(&mut v, rng);
            reduced_discriminant(c, s, (2.0 * theta).sin(), v) >= 0.0
        });
        Estimate::binomial(hits, trials)
    }
}

#[inline]
fn reduced_discriminant(cos_t: f64, sin_t: f64, sin_2t: f64, [a, b, c, d]: [f64; 4]) -> f64 {
    let x = a * cos_t - d * sin_t;
    x * x + 2.0 * sin_2t * b * c
}
