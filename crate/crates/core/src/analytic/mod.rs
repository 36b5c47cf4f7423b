//! Closed forms, quadratures and series for the two-factor `2 x 2` problem.
//!
//! With `β = 1/sin 2θ`,
//!
//! ```text
//! p_θ = 1 − (1/2π) ∫₀^π √(sin φ / (sin φ + β)) dφ
//!     = 1 − (1/2π) Σ_k (−1)^k/k! · Γ(k+½)Γ(k/2+¾)/Γ(k/2+5/4) · (sin 2θ)^{k+½}
//! ```
//!
//! is the probability that `diag(cos θ, sin θ)·G` has real eigenvalues for
//! Ginibre `G`. Averaging over `μ(θ) = 2 cos 2θ` gives `p⁽²⁾₂,₂ = π/4`.

pub mod quadrature;
pub mod series;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::sampling::ThetaPoint;
pub use quadrature::{integrate, integrate_sin_symmetric, integrate_sqrt_left, Quad, QuadratureError, QuadratureSpec};
pub use series::{hypergeom_pfq, SeriesResult};

pub const DEFAULT_MAX_TERMS: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("series diverges")]
    Divergent,
}

/// A value together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approx {
    pub value: f64,
    pub err_est: f64,
}

impl From<Quad> for Approx {
    fn from(q: Quad) -> Self {
        Approx {
            value: q.value,
            err_est: q.abs_error,
        }
    }
}

fn check_beta(beta: f64) -> Result<(), AnalyticError> {
    if beta > 0.0 && !beta.is_nan() {
        Ok(())
    } else {
        Err(AnalyticError::InvalidParameter(format!("beta must be positive, got {beta}")))
    }
}

/// `1 − (1/2π) ∫₀^π √(sin φ/(sin φ + β)) dφ` for any `β > 0`.
///
/// Only `β ≥ 1` corresponds to a Schmidt angle; smaller values are accepted
/// so that central differences at `β = 1` are possible.
pub fn p_of_beta(beta: f64, q: &QuadratureSpec) -> Result<Approx, AnalyticError> {
    check_beta(beta)?;
    if beta.is_infinite() {
        return Ok(Approx { value: 1.0, err_est: 0.0 });
    }
    let quad = integrate_sin_symmetric(|s| (s / (s + beta)).sqrt(), q)?;
    Ok(Approx {
        value: 1.0 - quad.value / (2.0 * PI),
        err_est: quad.abs_error / (2.0 * PI),
    })
}

pub fn p_theta_quadrature(theta: ThetaPoint, q: &QuadratureSpec) -> Result<Approx, AnalyticError> {
    p_of_beta(theta.beta, q)
}

/// The Gamma-ratio series for `p_θ`. `tol` bounds the magnitude of the last
/// term of `p_θ` itself, i.e. after the `1/2π` prefactor.
pub fn p_theta_series(theta: ThetaPoint, tol: f64, max_terms: usize) -> Result<SeriesResult, AnalyticError> {
    if !(tol > 0.0) {
        return Err(AnalyticError::InvalidParameter("tolerance must be positive".into()));
    }
    let s = theta.sin2().clamp(0.0, 1.0);
    let scale = 1.0 / (2.0 * PI);
    let raw = series::p_theta_alternating_sum(s, tol / scale, max_terms);
    Ok(SeriesResult {
        value: 1.0 - scale * raw.value,
        last_term_magnitude: scale * raw.last_term_magnitude,
        ..raw
    })
}

/// `dp/dβ = (1/4π) ∫₀^π √(sin φ) (sin φ + β)^{−3/2} dφ`.
pub fn dp_dbeta(beta: f64, q: &QuadratureSpec) -> Result<Approx, AnalyticError> {
    if !(beta >= 1.0) {
        return Err(AnalyticError::InvalidParameter(format!("beta must be >= 1, got {beta}")));
    }
    if beta.is_infinite() {
        return Ok(Approx { value: 0.0, err_est: 0.0 });
    }
    let quad = integrate_sin_symmetric(|s| s.sqrt() * (s + beta).powf(-1.5), q)?;
    Ok(Approx {
        value: quad.value / (4.0 * PI),
        err_est: quad.abs_error / (4.0 * PI),
    })
}

/// `∫₀^π arsinh(√sin φ)/sin φ dφ`, which equals `π²/2`.
pub fn p2_22_raw_integral(q: &QuadratureSpec) -> Result<Approx, AnalyticError> {
    let g = |s: f64| {
        if s == 0.0 {
            // only reached if the node sits exactly on an endpoint
            f64::INFINITY
        } else {
            s.sqrt().asinh() / s
        }
    };
    Ok(integrate_sin_symmetric(g, q)?.into())
}

/// `p⁽²⁾₂,₂ = (1/2π) ∫₀^π arsinh(√sin φ)/sin φ dφ = π/4`.
pub fn p2_22_integral(q: &QuadratureSpec) -> Result<Approx, AnalyticError> {
    let raw = p2_22_raw_integral(q)?;
    Ok(Approx {
        value: raw.value / (2.0 * PI),
        err_est: raw.err_est / (2.0 * PI),
    })
}

/// `∫₀^π √((1 + sin x)/sin x) dx = 2π`.
pub fn companion_integral(q: &QuadratureSpec) -> Result<Approx, AnalyticError> {
    Ok(integrate_sin_symmetric(|s| ((1.0 + s) / s).sqrt(), q)?.into())
}

/// `∫₀^{π/4} h(p_θ) μ(θ) dθ` computed as `∫₀¹ h(p(1/u)) du` with
/// `u = sin 2θ` (so `du = μ dθ`). `p` behaves like `1 − c√u` at `u = 0`,
/// hence the square-root substitution on the outer integral.
fn average_over_mu(h: impl Fn(f64) -> f64, q: &QuadratureSpec) -> Result<Approx, AnalyticError> {
    let inner = *q;
    let failure = std::cell::RefCell::new(None);
    let outer = integrate_sqrt_left(
        |u| {
            if u == 0.0 {
                return h(1.0);
            }
            match p_of_beta(1.0 / u, &inner) {
                Ok(p) => h(p.value),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        1.0,
        q,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    // each inner value carries at most abs_tol of its own error
    Ok(Approx {
        value: outer.value,
        err_est: outer.abs_error + q.abs_tol.max(q.rel_tol),
    })
}

/// `⟨f⟩ = ∫₀^{π/4} (p_θ − ½) 2 cos 2θ dθ = (π − 2)/4`.
pub fn mean_f(q: &QuadratureSpec) -> Result<Approx, AnalyticError> {
    average_over_mu(|p| p - 0.5, q)
}

/// `∫₀^{π/4} p_θ 2 cos 2θ dθ = π/4`.
pub fn mean_p_theta(q: &QuadratureSpec) -> Result<Approx, AnalyticError> {
    average_over_mu(|p| p, q)
}

/// Fraction of real two-qubit states co-optimal with the Schmidt state at
/// angle θ: `f_θ = p_θ − ½`.
pub fn f_theta(theta: ThetaPoint, q: &QuadratureSpec) -> Result<Approx, AnalyticError> {
    let p = p_theta_quadrature(theta, q)?;
    Ok(Approx {
        value: p.value - 0.5,
        ..p
    })
}

fn check_dimension(n: usize) -> Result<(), AnalyticError> {
    if n == 0 {
        Err(AnalyticError::InvalidParameter("dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Probability that a single `n x n` real Ginibre matrix has only real
/// eigenvalues, `2^{−n(n−1)/4}`.
pub fn p_nn_single(n: usize) -> Result<f64, AnalyticError> {
    check_dimension(n)?;
    let n = n as f64;
    Ok((-n * (n - 1.0) / 4.0).exp2())
}

/// Large-`n` asymptote `√(2n/π)` of the expected real-eigenvalue count.
/// It is not exact for any finite `n`; see [`E2_EXACT`].
pub fn en_asymptote(n: usize) -> Result<f64, AnalyticError> {
    check_dimension(n)?;
    Ok((2.0 * n as f64 / PI).sqrt())
}

/// Exact `E₂ = 2 p₂,₂ = √2`.
pub const E2_EXACT: f64 = std::f64::consts::SQRT_2;

/// Exact `p_{π/4} = p₂,₂ = 1/√2`.
pub const P22: f64 = FRAC_1_SQRT_2;

/// Gauss's sum `₂F₁(a, b; c; 1) = Γ(c)Γ(c−a−b)/(Γ(c−a)Γ(c−b))`, valid for
/// `c − a − b > 0`.
pub fn gauss_2f1_unit(a: f64, b: f64, c: f64) -> Result<f64, AnalyticError> {
    if !(c - a - b > 0.0) {
        return Err(AnalyticError::Divergent);
    }
    Ok(gamma(c) * gamma(c - a - b) / (gamma(c - a) * gamma(c - b)))
}

/// `√2 π ₂F₁(¼, ¼; 5/4; 1)`, one closed form of `π²/2`.
pub fn gauss_form(tol: f64) -> Result<Approx, AnalyticError> {
    let r = hypergeom_pfq(&[0.25, 0.25], &[1.25], 1.0, tol, DEFAULT_MAX_TERMS)?;
    let k = std::f64::consts::SQRT_2 * PI;
    Ok(Approx {
        value: k * r.value,
        err_est: k * r.last_term_magnitude,
    })
}

/// The two balanced `₃F₂` terms
/// `Γ²(¼)/√(2π) ₃F₂(¼,¼,¼; ½,5/4; 1) − Γ²(−¼)/(24√(2π)) ₃F₂(¾,¾,¾; 3/2,7/4; 1)`,
/// which also equal `π²/2`.
pub fn saalschutz_pair(tol: f64) -> Result<Approx, AnalyticError> {
    let f1 = hypergeom_pfq(&[0.25, 0.25, 0.25], &[0.5, 1.25], 1.0, tol, DEFAULT_MAX_TERMS)?;
    let f2 = hypergeom_pfq(&[0.75, 0.75, 0.75], &[1.5, 1.75], 1.0, tol, DEFAULT_MAX_TERMS)?;
    let root = (2.0 * PI).sqrt();
    let c1 = gamma(0.25).powi(2) / root;
    let c2 = gamma(-0.25).powi(2) / (24.0 * root);
    Ok(Approx {
        value: c1 * f1.value - c2 * f2.value,
        err_est: c1 * f1.last_term_magnitude + c2 * f2.last_term_magnitude,
    })
}
