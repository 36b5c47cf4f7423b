//! Dense real linear algebra: products, norms, SVD, eigenvalues and the
//! structural count of real eigenvalues.

mod matrix;
pub mod schur;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matrix::MatrixR;
pub(crate) use matrix::matmul_into;
use schur::{block_discriminant, real_schur};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix has zero dimension")]
    EmptyMatrix,
    #[error("matrix is not square ({rows} x {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty list of factors")]
    EmptyProduct,
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },
    #[error("SVD did not converge")]
    SvdNoConvergence,
}

/// How the eigenvalue multiset and its real count were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    Schur,
    ClosedForm2x2,
}

/// How [`count_real_with`] classifies eigenvalues as real.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RealCountMethod {
    /// Block structure of the real Schur form (2×2 closed form for n = 2).
    #[default]
    Schur,
    /// Fallback for complex-only eigensolvers: an eigenvalue is real iff
    /// `|Im λ| ≤ rel_tol · ‖A‖_F`, followed by parity repair.
    ImaginaryThreshold { rel_tol: f64 },
}

impl RealCountMethod {
    pub const DEFAULT_IMAG_REL_TOL: f64 = 1e-10;
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex<f64>>,
    pub real_count: usize,
    pub method: SpectrumMethod,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn sum(&self) -> Complex<f64> {
        self.eigenvalues.iter().sum()
    }

    pub fn product(&self) -> Complex<f64> {
        self.eigenvalues.iter().product()
    }
}

/// `A₁ A₂ ⋯ A_K`, folded left to right without rescaling.
pub fn product_chain(matrices: &[MatrixR]) -> Result<MatrixR, LinalgError> {
    let (first, rest) = matrices.split_first().ok_or(LinalgError::EmptyProduct)?;
    let n = first.dim();
    if let Some(bad) = rest.iter().find(|m| m.dim() != n) {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: bad.dim(),
        });
    }
    let mut acc = first.clone();
    let mut scratch = MatrixR::zeros(n);
    for m in rest {
        matmul_into(&acc, m, &mut scratch);
        std::mem::swap(&mut acc, &mut scratch);
    }
    Ok(acc)
}

pub fn frobenius_norm(a: &MatrixR) -> f64 {
    a.frobenius_norm()
}

/// Eigenvalues of a 2×2 matrix from its trace and discriminant.
fn eigenvalues_2x2(a: f64, b: f64, c: f64, d: f64) -> ([Complex<f64>; 2], usize) {
    let p = 0.5 * (a - d);
    let q = block_discriminant(a, b, c, d);
    if q >= 0.0 {
        // λ = d + p ± √q, written to avoid cancellation
        let root = q.sqrt();
        let zz = if p >= 0.0 { p + root } else { p - root };
        let l1 = d + zz;
        let l2 = if zz != 0.0 { d - b * c / zz } else { l1 };
        ([Complex::new(l1, 0.0), Complex::new(l2, 0.0)], 2)
    } else {
        let re = 0.5 * (a + d);
        let im = (-q).sqrt();
        ([Complex::new(re, im), Complex::new(re, -im)], 0)
    }
}

/// Reads eigenvalues off a quasi-triangular Schur factor.
fn spectrum_from_schur(t: &MatrixR) -> (Vec<Complex<f64>>, usize) {
    let n = t.dim();
    let mut eig = Vec::with_capacity(n);
    let mut real = 0;
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (pair, k) = eigenvalues_2x2(t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            eig.extend_from_slice(&pair);
            real += k;
            i += 2;
        } else {
            eig.push(Complex::new(t[(i, i)], 0.0));
            real += 1;
            i += 1;
        }
    }
    (eig, real)
}

/// Eigenvalue multiset with its real count. 2×2 input uses the closed form;
/// larger input goes through the real Schur form.
pub fn eigenvalues(a: &MatrixR) -> Result<Spectrum, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if a.dim() == 2 {
        let (pair, k) = eigenvalues_2x2(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
        return Ok(Spectrum {
            eigenvalues: pair.to_vec(),
            real_count: k,
            method: SpectrumMethod::ClosedForm2x2,
        });
    }
    schur_spectrum(a)
}

/// Eigenvalues through the real Schur form regardless of dimension.
pub fn schur_spectrum(a: &MatrixR) -> Result<Spectrum, LinalgError> {
    let s = real_schur(a, false)?;
    let (eigenvalues, real_count) = spectrum_from_schur(&s.t);
    Ok(Spectrum {
        eigenvalues,
        real_count,
        method: SpectrumMethod::Schur,
    })
}

/// Number of real eigenvalues: `n − 2·(#2×2 Schur blocks with negative discriminant)`.
pub fn count_real(a: &MatrixR) -> Result<usize, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if a.dim() == 2 {
        let q = block_discriminant(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
        return Ok(if q >= 0.0 { 2 } else { 0 });
    }
    let t = real_schur(a, false)?.t;
    let n = t.dim();
    let mut complex_blocks = 0;
    let mut i = 0;
    while i + 1 < n {
        if t[(i + 1, i)] != 0.0 {
            if block_discriminant(t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]) < 0.0 {
                complex_blocks += 1;
            }
            i += 2;
        } else {
            i += 1;
        }
    }
    Ok(n - 2 * complex_blocks)
}

pub fn count_real_with(a: &MatrixR, method: RealCountMethod) -> Result<usize, LinalgError> {
    match method {
        RealCountMethod::Schur => count_real(a),
        RealCountMethod::ImaginaryThreshold { rel_tol } => {
            let spectrum = eigenvalues(a)?;
            Ok(classify_by_imaginary_part(
                &spectrum.eigenvalues,
                rel_tol * a.frobenius_norm(),
            ))
        }
    }
}

/// Counts `|Im λ| ≤ threshold` as real; if that leaves `n − k` odd, the
/// non-real eigenvalue with the smallest `|Im λ|` is reclassified as real.
pub fn classify_by_imaginary_part(eigenvalues: &[Complex<f64>], threshold: f64) -> usize {
    let n = eigenvalues.len();
    let mut k = eigenvalues.iter().filter(|z| z.im.abs() <= threshold).count();
    if (n - k) % 2 == 1 {
        k += 1;
    }
    k
}

/// `A = O₁ Σ O₂ᵀ` with singular values sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub left: MatrixR,
    pub singular_values: Vec<f64>,
    pub right: MatrixR,
}

impl Svd {
    pub fn sigma(&self) -> MatrixR {
        MatrixR::diag(&self.singular_values)
    }
}

pub fn svd(a: &MatrixR) -> Result<Svd, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.dim();
    let m = DMatrix::from_row_slice(n, n, a.as_slice());
    let dec = nalgebra::linalg::SVD::try_new(m, true, true, f64::EPSILON, 0)
        .ok_or(LinalgError::SvdNoConvergence)?;
    let u = dec.u.ok_or(LinalgError::SvdNoConvergence)?;
    let v_t = dec.v_t.ok_or(LinalgError::SvdNoConvergence)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));

    let mut left = MatrixR::zeros(n);
    let mut right = MatrixR::zeros(n);
    let mut singular_values = Vec::with_capacity(n);
    for (col, &src) in order.iter().enumerate() {
        singular_values.push(dec.singular_values[src]);
        for row in 0..n {
            left[(row, col)] = u[(row, src)];
            right[(row, col)] = v_t[(src, row)];
        }
    }
    Ok(Svd {
        left,
        singular_values,
        right,
    })
}
