//! Truncated and accelerated series: the alternating `p_θ` expansion and
//! generalised hypergeometric `pFq` sums.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::AnalyticError;

/// Partial sum of a series with its truncation bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    /// Magnitude of the last term summed, or the tail estimate when the sum
    /// was accelerated.
    pub last_term_magnitude: f64,
    /// False when the term cap was hit before the tolerance.
    pub converged: bool,
    pub accelerated: bool,
}

/// Terms below this index never trigger the stopping rule.
const MIN_TERMS: usize = 4;

/// Sum of `Σ (−1)^k a_k` by the Cohen–Villegas–Zagier acceleration using
/// `a_0 … a_{n−1}`. For moment sequences `a_k = ∫₀¹ x^k dμ` the error is at
/// most `2 a_0 / (3 + √8)^n`.
pub fn cvz_alternating(a: &[f64]) -> f64 {
    let n = a.len();
    let mut d = (3.0 + 8f64.sqrt()).powi(n as i32);
    d = 0.5 * (d + 1.0 / d);
    let mut b = -1.0;
    let mut c = -d;
    let mut s = 0.0;
    for (k, &ak) in a.iter().enumerate() {
        c = b - c;
        s += c * ak;
        let (kf, nf) = (k as f64, n as f64);
        b *= (kf + nf) * (kf - nf) / ((kf + 0.5) * (kf + 1.0));
    }
    s / d
}

/// `Γ(k+½) Γ(k/2+¾) / (k! Γ(k/2+5/4))`, computed in log space.
pub fn p_theta_coefficient(k: usize) -> f64 {
    let k = k as f64;
    (ln_gamma(k + 0.5) + ln_gamma(0.5 * k + 0.75) - ln_gamma(k + 1.0) - ln_gamma(0.5 * k + 1.25)).exp()
}

/// `Σ_k (−1)^k c_k s^{k+½}` with the coefficients above.
///
/// Summed directly while `|term| ≥ tol` (and for at least four terms). The
/// terms only decay like `1/k` at `s = 1`, so if `max_terms` runs out first
/// the sum is redone with the CVZ acceleration, which is valid here because
/// `c_k s^k` is a Hausdorff moment sequence.
pub fn p_theta_alternating_sum(s: f64, tol: f64, max_terms: usize) -> SeriesResult {
    if s == 0.0 {
        return SeriesResult {
            value: 0.0,
            terms_used: 0,
            last_term_magnitude: 0.0,
            converged: true,
            accelerated: false,
        };
    }
    let sqrt_s = s.sqrt();
    let mut sum = 0.0;
    let mut power = sqrt_s;
    let mut last = f64::INFINITY;
    for k in 0..max_terms {
        let term = p_theta_coefficient(k) * power;
        sum += if k % 2 == 0 { term } else { -term };
        last = term;
        if term < tol && k + 1 >= MIN_TERMS {
            return SeriesResult {
                value: sum,
                terms_used: k + 1,
                last_term_magnitude: term,
                converged: true,
                accelerated: false,
            };
        }
        power *= s;
    }

    // CVZ error bound 2 a_0 / 5.83^n ≤ tol
    let a0 = p_theta_coefficient(0) * sqrt_s;
    let rate = (3.0 + 8f64.sqrt()).ln();
    let needed = ((2.0 * a0 / tol).ln() / rate).ceil().max(1.0) as usize + 2;
    let n = needed.min(max_terms.max(1));
    let mut terms = Vec::with_capacity(n);
    let mut power = sqrt_s;
    for k in 0..n {
        terms.push(p_theta_coefficient(k) * power);
        power *= s;
    }
    let bound = 2.0 * a0 / (3.0 + 8f64.sqrt()).powi(n as i32);
    let value = cvz_alternating(&terms);
    let converged = bound < tol;
    SeriesResult {
        value,
        terms_used: n,
        last_term_magnitude: if converged { bound } else { last.max(bound) },
        converged,
        accelerated: true,
    }
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// Ratio `t_{k+1}/t_k` of consecutive pFq terms.
fn term_ratio(top: &[f64], bottom: &[f64], z: f64, k: usize) -> f64 {
    let k = k as f64;
    let num: f64 = top.iter().map(|a| a + k).product();
    let den: f64 = bottom.iter().map(|b| b + k).product();
    num / den * z / (k + 1.0)
}

/// Compensated running sum.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Partial sums of a unit-argument pFq at `n0 · 2^j`, `j = 0..=levels`, are
/// extrapolated assuming `S − S_N = N^{−σ}(f₀ + f₁/N + …)` with
/// `σ = Σb − Σa`; the tail of a balanced-type series has exactly this form.
const RICHARDSON_START: usize = 16;
const RICHARDSON_LEVELS: usize = 8;

fn unit_argument_sum(top: &[f64], bottom: &[f64], sigma: f64) -> Result<SeriesResult, AnalyticError> {
    let checkpoints: Vec<usize> = (0..=RICHARDSON_LEVELS).map(|j| RICHARDSON_START << j).collect();
    let last_n = *checkpoints.last().expect("nonempty");
    let mut partial = Vec::with_capacity(checkpoints.len());
    let mut acc = Neumaier::default();
    let mut term = 1.0;
    let mut next = 0;
    for k in 0..last_n {
        acc.add(term);
        if k + 1 == checkpoints[next] {
            partial.push(acc.value());
            next += 1;
        }
        term *= term_ratio(top, bottom, 1.0, k);
        if !term.is_finite() {
            return Err(AnalyticError::Divergent);
        }
    }

    let extrapolate = |levels: usize| -> Option<f64> {
        let rows = levels + 1;
        let mut a = DMatrix::zeros(rows, rows);
        let mut rhs = DVector::zeros(rows);
        for (r, (&n, &s)) in checkpoints.iter().zip(&partial).take(rows).enumerate() {
            let inv = 1.0 / n as f64;
            a[(r, 0)] = 1.0;
            for c in 1..rows {
                a[(r, c)] = inv.powf(sigma + (c - 1) as f64);
            }
            rhs[r] = s;
        }
        a.lu().solve(&rhs).map(|x| x[0])
    };
    let best = extrapolate(RICHARDSON_LEVELS).ok_or(AnalyticError::Divergent)?;
    let previous = extrapolate(RICHARDSON_LEVELS - 1).ok_or(AnalyticError::Divergent)?;
    Ok(SeriesResult {
        value: best,
        terms_used: last_n,
        last_term_magnitude: (best - previous).abs(),
        converged: true,
        accelerated: true,
    })
}

/// `pFq(top; bottom; z) = Σ_k Π(a)_k / Π(b)_k · z^k / k!` for real `z ∈ (−1, 1]`.
///
/// Terminating series (a nonpositive integer on top) are summed exactly.
/// For `|z| < 1` terms are added until `|term| < tol`. At `z = 1` the series
/// converges iff `Σb − Σa > 0`; the slowly decaying tail is handled by
/// Richardson extrapolation in the partial-sum index, and
/// `last_term_magnitude` then holds the change between the last two
/// extrapolation levels.
pub fn hypergeom_pfq(top: &[f64], bottom: &[f64], z: f64, tol: f64, max_terms: usize) -> Result<SeriesResult, AnalyticError> {
    if top.iter().chain(bottom).chain([&z]).any(|x| !x.is_finite()) {
        return Err(AnalyticError::InvalidParameter("non-finite pFq parameter".into()));
    }
    if let Some(b) = bottom.iter().find(|&&b| is_nonpositive_integer(b)) {
        return Err(AnalyticError::InvalidParameter(format!(
            "bottom parameter {b} is a nonpositive integer"
        )));
    }
    if !(tol > 0.0) {
        return Err(AnalyticError::InvalidParameter("tolerance must be positive".into()));
    }
    if z <= -1.0 || z > 1.0 {
        return Err(AnalyticError::Unsupported(format!(
            "pFq is only evaluated for z in (-1, 1], got {z}"
        )));
    }

    let terminating = top
        .iter()
        .filter(|&&a| is_nonpositive_integer(a))
        .map(|&a| (-a) as usize)
        .min();

    if let Some(degree) = terminating {
        let mut acc = Neumaier::default();
        let mut term = 1.0;
        for k in 0..=degree {
            acc.add(term);
            term *= term_ratio(top, bottom, z, k);
        }
        return Ok(SeriesResult {
            value: acc.value(),
            terms_used: degree + 1,
            last_term_magnitude: 0.0,
            converged: true,
            accelerated: false,
        });
    }

    if z == 0.0 {
        return Ok(SeriesResult {
            value: 1.0,
            terms_used: 1,
            last_term_magnitude: 0.0,
            converged: true,
            accelerated: false,
        });
    }

    if z == 1.0 {
        if top.len() > bottom.len() + 1 {
            return Err(AnalyticError::Divergent);
        }
        let sigma: f64 = bottom.iter().sum::<f64>() - top.iter().sum::<f64>();
        if top.len() == bottom.len() + 1 && sigma <= 0.0 {
            return Err(AnalyticError::Divergent);
        }
        if top.len() == bottom.len() + 1 {
            return unit_argument_sum(top, bottom, sigma);
        }
        // fewer numerator parameters: factorial decay, direct summation is fine
    }

    if top.len() > bottom.len() + 1 {
        return Err(AnalyticError::Divergent);
    }

    let mut acc = Neumaier::default();
    let mut term = 1.0;
    let mut growing = 0;
    for k in 0..max_terms {
        acc.add(term);
        if term.abs() < tol && k + 1 >= MIN_TERMS {
            return Ok(SeriesResult {
                value: acc.value(),
                terms_used: k + 1,
                last_term_magnitude: term.abs(),
                converged: true,
                accelerated: false,
            });
        }
        let next = term * term_ratio(top, bottom, z, k);
        if !next.is_finite() {
            return Err(AnalyticError::Divergent);
        }
        // terms may rise for a while before |z| wins; only persistent growth
        // past the point where the ratio has settled counts as divergence
        growing = if next.abs() > term.abs() { growing + 1 } else { 0 };
        if growing > 10_000 {
            return Err(AnalyticError::Divergent);
        }
        term = next;
    }
    Ok(SeriesResult {
        value: acc.value(),
        terms_used: max_terms,
        last_term_magnitude: term.abs(),
        converged: false,
        accelerated: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn cvz_on_alternating_harmonic() {
        // Σ (−1)^k/(k+1) = ln 2
        let a: Vec<f64> = (0..25).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        assert!((cvz_alternating(&a) - LN_2).abs() < 1e-15);
    }

    #[test]
    fn zero_argument_is_one() {
        let r = hypergeom_pfq(&[0.3, 1.7], &[2.5], 0.0, 1e-12, 100).unwrap();
        assert_eq!(r.value, 1.0);
        let r = hypergeom_pfq(&[], &[], 0.0, 1e-12, 100).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn geometric_and_exponential() {
        // 1F0(1;;z) = 1/(1−z)
        let r = hypergeom_pfq(&[1.0], &[], 0.5, 1e-16, 500).unwrap();
        assert!((r.value - 2.0).abs() < 1e-15);
        // 0F0(;;z) = e^z
        let r = hypergeom_pfq(&[], &[], 0.7, 1e-17, 500).unwrap();
        assert!((r.value - 0.7f64.exp()).abs() < 1e-15);
        // 0F0 at z = 1 terminates by factorial decay
        let r = hypergeom_pfq(&[], &[], 1.0, 1e-17, 500).unwrap();
        assert!((r.value - 1f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn terminating_series() {
        // 2F1(−2, 1; 1; z) = (1 − z)²
        let r = hypergeom_pfq(&[-2.0, 1.0], &[1.0], 1.0, 1e-12, 10).unwrap();
        assert!(r.value.abs() < 1e-15);
        let r = hypergeom_pfq(&[-2.0, 1.0], &[1.0], 0.25, 1e-12, 10).unwrap();
        assert!((r.value - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn arcsin_series() {
        // 2F1(½,½;3/2;z²) = arcsin z / z
        let z: f64 = 0.6;
        let r = hypergeom_pfq(&[0.5, 0.5], &[1.5], z * z, 1e-17, 500).unwrap();
        assert!((r.value - z.asin() / z).abs() < 1e-15);
        // and at z = 1: π/2
        let r = hypergeom_pfq(&[0.5, 0.5], &[1.5], 1.0, 1e-12, 500).unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-12, "{}", r.value);
        assert!(r.accelerated);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            hypergeom_pfq(&[1.0], &[-2.0], 0.5, 1e-10, 10),
            Err(AnalyticError::InvalidParameter(_))
        ));
        assert!(matches!(
            hypergeom_pfq(&[1.0, 1.0], &[1.5], 1.0, 1e-10, 10),
            Err(AnalyticError::Divergent)
        ));
        assert!(matches!(
            hypergeom_pfq(&[1.0, 1.0, 1.0], &[1.5], 0.5, 1e-10, 10),
            Err(AnalyticError::Divergent)
        ));
        assert!(matches!(
            hypergeom_pfq(&[1.0], &[2.0], -1.5, 1e-10, 10),
            Err(AnalyticError::Unsupported(_))
        ));
    }

    #[test]
    fn term_cap_is_flagged() {
        let r = hypergeom_pfq(&[1.0], &[], 0.999, 1e-15, 50).unwrap();
        assert!(!r.converged);
        assert_eq!(r.terms_used, 50);
    }

    #[test]
    fn alternating_sum_at_zero() {
        let r = p_theta_alternating_sum(0.0, 1e-12, 500);
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
    }
}
