//! Real two-qubit pure states, the `σ_y ⊗ σ_y` bilinear form, concurrence
//! and the co-optimal pair predicate.
//!
//! Amplitudes are ordered `(|00⟩, |01⟩, |10⟩, |11⟩)` throughout, and the
//! coefficient matrix of `(a, b, c, d)` is the row-major `[[a, b], [c, d]]`.
//!
//! For `u = cos θ|00⟩ + sin θ|11⟩` and `v = (a, b, c, d)` the pair is
//! co-optimal exactly when
//! `M = diag(cos θ, sin θ) · [[d, c], [b, a]]` has `det M > 0` and real
//! eigenvalues. The coefficient matrix appears with both qubit bases
//! reversed; this is what a direct evaluation of `⟨u|σ_y⊗σ_y|v⟩ = −(d cos θ + a sin θ)`
//! gives. Since the four amplitudes are exchangeable under uniform sampling,
//! fractions computed either way coincide.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::MatrixR;
use crate::montecarlo::{Engine, Estimate};
use crate::sampling::{s3_from_rng, theta_from_rng, SeedSpec, ThetaPoint};

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntanglementError {
    #[error("state is not normalized: |psi|^2 = {0}")]
    NotNormalized(f64),
    #[error("cannot normalize a zero or non-finite vector")]
    Degenerate,
    #[error("theta = 0 is a product state; the co-optimal fraction needs theta in (0, pi/4]")]
    ProductState,
    #[error("need at least one trial")]
    NoTrials,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitRealState {
    amp: [f64; 4],
}

impl TwoQubitRealState {
    /// Accepts amplitudes whose squared norm is 1 within `1e-12`.
    pub fn new(amp: [f64; 4]) -> Result<Self, EntanglementError> {
        let norm2: f64 = amp.iter().map(|x| x * x).sum();
        if !((norm2 - 1.0).abs() <= NORM_TOL) {
            return Err(EntanglementError::NotNormalized(norm2));
        }
        Ok(TwoQubitRealState { amp })
    }

    /// Rescales any nonzero finite vector onto S³.
    pub fn normalize(raw: [f64; 4]) -> Result<Self, EntanglementError> {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EntanglementError::Degenerate);
        }
        Ok(TwoQubitRealState {
            amp: raw.map(|x| x / norm),
        })
    }

    pub(crate) fn from_normalized(amp: [f64; 4]) -> Self {
        debug_assert!((amp.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() <= NORM_TOL);
        TwoQubitRealState { amp }
    }

    /// `cos θ|00⟩ + sin θ|11⟩`.
    pub fn schmidt(theta: f64) -> Self {
        TwoQubitRealState {
            amp: [theta.cos(), 0.0, 0.0, theta.sin()],
        }
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn bell() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        TwoQubitRealState { amp: [h, 0.0, 0.0, h] }
    }

    pub fn amplitudes(&self) -> [f64; 4] {
        self.amp
    }

    /// `[[a, b], [c, d]]`.
    pub fn coefficient_matrix(&self) -> MatrixR {
        let [a, b, c, d] = self.amp;
        MatrixR::from_row_major(2, vec![a, b, c, d]).expect("2x2")
    }
}

impl std::ops::Neg for TwoQubitRealState {
    type Output = Self;

    fn neg(self) -> Self {
        TwoQubitRealState {
            amp: self.amp.map(|x| -x),
        }
    }
}

/// `⟨u|σ_y⊗σ_y|v⟩` for real states.
///
/// `σ_y⊗σ_y` sends `|00⟩ → −|11⟩`, `|01⟩ → |10⟩`, `|10⟩ → |01⟩`, `|11⟩ → −|00⟩`.
pub fn r_bilinear(u: &TwoQubitRealState, v: &TwoQubitRealState) -> f64 {
    let (u, v) = (u.amp, v.amp);
    -(u[0] * v[3] + u[3] * v[0]) + u[1] * v[2] + u[2] * v[1]
}

/// `|⟨u|σ_y⊗σ_y|u⟩|`.
pub fn concurrence(u: &TwoQubitRealState) -> f64 {
    r_bilinear(u, u).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RForm {
    pub r11: f64,
    pub r12: f64,
    pub r22: f64,
}

impl RForm {
    pub fn of(u: &TwoQubitRealState, v: &TwoQubitRealState) -> Self {
        RForm {
            r11: r_bilinear(u, u),
            r12: r_bilinear(u, v),
            r22: r_bilinear(v, v),
        }
    }

    /// `r11 r22 > 0` and `r11 r22 − r12² < 0`, both strict.
    pub fn is_co_optimal(&self) -> bool {
        let prod = self.r11 * self.r22;
        prod > 0.0 && prod - self.r12 * self.r12 < 0.0
    }
}

pub fn co_optimal_pair(u: &TwoQubitRealState, v: &TwoQubitRealState) -> bool {
    RForm::of(u, v).is_co_optimal()
}

/// `diag(cos θ, sin θ) · [[d, c], [b, a]]` for `v = (a, b, c, d)`.
pub fn schmidt_product_matrix(theta: f64, v: &TwoQubitRealState) -> MatrixR {
    let [a, b, c, d] = v.amp;
    let (s, co) = theta.sin_cos();
    MatrixR::from_row_major(2, vec![co * d, co * c, s * b, s * a]).expect("2x2")
}

/// `det M > 0` and `(tr M)² − 4 det M ≥ 0`.
pub fn positive_det_real_spectrum(m: &MatrixR) -> bool {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let tr = m[(0, 0)] + m[(1, 1)];
    det > 0.0 && tr * tr - 4.0 * det >= 0.0
}

fn schmidt_trial<R: Rng + ?Sized>(u: &TwoQubitRealState, rng: &mut R) -> bool {
    co_optimal_pair(u, &s3_from_rng(rng))
}

/// Monte Carlo fraction of `v ~ U(S³)` co-optimal with `cos θ|00⟩ + sin θ|11⟩`.
pub fn fraction_cooptimal_theta(
    engine: &Engine,
    theta: ThetaPoint,
    trials: usize,
    master_seed: u64,
) -> Result<Estimate, EntanglementError> {
    if theta.theta == 0.0 {
        return Err(EntanglementError::ProductState);
    }
    if trials == 0 {
        return Err(EntanglementError::NoTrials);
    }
    let u = TwoQubitRealState::schmidt(theta.theta);
    let hits = engine.count_successes(trials, master_seed, 0, |rng| schmidt_trial(&u, rng));
    Ok(Estimate::binomial(hits, trials))
}

/// Monte Carlo fraction of independent uniform pairs `(u, v)` that are co-optimal.
pub fn fraction_cooptimal_pairs(engine: &Engine, trials: usize, master_seed: u64) -> Result<Estimate, EntanglementError> {
    if trials == 0 {
        return Err(EntanglementError::NoTrials);
    }
    let hits = engine.count_successes(trials, master_seed, 0, |rng| {
        let u = s3_from_rng(rng);
        let v = s3_from_rng(rng);
        co_optimal_pair(&u, &v)
    });
    Ok(Estimate::binomial(hits, trials))
}

/// Two-stage estimator of the pair fraction: `θ ~ 2 cos 2θ`, then `v ~ U(S³)`
/// tested against the Schmidt state at `θ`.
pub fn fraction_cooptimal_nested(engine: &Engine, trials: usize, master_seed: u64) -> Result<Estimate, EntanglementError> {
    if trials == 0 {
        return Err(EntanglementError::NoTrials);
    }
    let hits = engine.count_successes(trials, master_seed, 0, |rng| {
        let theta = theta_from_rng(rng);
        schmidt_trial(&TwoQubitRealState::schmidt(theta.theta), rng)
    });
    Ok(Estimate::binomial(hits, trials))
}

/// Draws `v` for trial `t` the same way [`fraction_cooptimal_theta`] does.
pub fn trial_state(master_seed: u64, trial: u64) -> TwoQubitRealState {
    s3_from_rng(&mut SeedSpec::new(master_seed, trial).rng())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    #[test]
    fn bell_r11() {
        let bell = TwoQubitRealState::bell();
        assert!((r_bilinear(&bell, &bell) + 1.0).abs() < 1e-15);
        assert!((concurrence(&bell) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn r22_formula() {
        let v = TwoQubitRealState::normalize([0.3, -0.5, 0.7, 0.2]).unwrap();
        let [a, b, c, d] = v.amplitudes();
        assert!((r_bilinear(&v, &v) - 2.0 * (b * c - a * d)).abs() < 1e-15);
    }

    #[test]
    fn product_state_is_unentangled() {
        let p = TwoQubitRealState::new([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r_bilinear(&p, &p), 0.0);
        assert_eq!(concurrence(&p), 0.0);
    }

    #[test]
    fn schmidt_concurrence() {
        for theta in [0.1, 0.3, PI / 6.0, FRAC_PI_4] {
            let c = concurrence(&TwoQubitRealState::schmidt(theta));
            assert!((c - (2.0 * theta).sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn predicate_boundary_is_false() {
        let bell = TwoQubitRealState::bell();
        let p = TwoQubitRealState::new([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(!co_optimal_pair(&bell, &p));
    }

    #[test]
    fn diagonal_coefficient_matrix_is_co_optimal() {
        // M₁ = [[2, 0], [0, 1]] / √5: det > 0, eigenvalues {2, 1}
        let bell = TwoQubitRealState::bell();
        let v = TwoQubitRealState::normalize([2.0, 0.0, 0.0, 1.0]).unwrap();
        let rf = RForm::of(&bell, &v);
        assert!((rf.r11 + 1.0).abs() < 1e-15);
        assert!((rf.r22 + 0.8).abs() < 1e-15);
        assert!(rf.is_co_optimal());
        assert!(positive_det_real_spectrum(&v.coefficient_matrix()));
    }

    #[test]
    fn rotation_coefficient_matrix_is_not() {
        let bell = TwoQubitRealState::bell();
        let v = TwoQubitRealState::normalize([0.0, -1.0, 1.0, 0.0]).unwrap();
        let rf = RForm::of(&bell, &v);
        assert!((rf.r22 + 1.0).abs() < 1e-15);
        assert!(rf.r12.abs() < 1e-15);
        assert!(!rf.is_co_optimal());
        assert!(!positive_det_real_spectrum(&v.coefficient_matrix()));
    }

    #[test]
    fn normalization_errors() {
        assert!(matches!(
            TwoQubitRealState::new([1.0, 1.0, 0.0, 0.0]),
            Err(EntanglementError::NotNormalized(_))
        ));
        assert_eq!(
            TwoQubitRealState::normalize([0.0; 4]),
            Err(EntanglementError::Degenerate)
        );
        let s = TwoQubitRealState::new([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap();
        assert_eq!(s, TwoQubitRealState::bell());
    }

    #[test]
    fn theta_zero_is_excluded() {
        let engine = Engine::new(Some(1)).unwrap();
        let r = fraction_cooptimal_theta(&engine, ThetaPoint::new(0.0).unwrap(), 10, 0);
        assert_eq!(r, Err(EntanglementError::ProductState));
        assert_eq!(fraction_cooptimal_pairs(&engine, 0, 0), Err(EntanglementError::NoTrials));
    }
}
