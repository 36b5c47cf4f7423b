use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use super::LinalgError;

/// Dense square real matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct MatrixR {
    n: usize,
    data: Vec<f64>,
}

impl MatrixR {
    pub fn zeros(n: usize) -> Self {
        MatrixR {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds an `n x n` matrix from `n²` row-major entries.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if n == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if data.len() != n * n {
            return Err(LinalgError::NotSquare {
                rows: data.len() / n,
                cols: n,
            });
        }
        Ok(MatrixR { n, data })
    }

    /// Builds a matrix from nested rows; every row must have the same length as the row count.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if n == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_ref();
            if row.len() != n {
                return Err(LinalgError::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(MatrixR { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scaled(&self, c: f64) -> Self {
        MatrixR {
            n: self.n,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn scale_in_place(&mut self, c: f64) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// `√(Σ a_ij²)`.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .unwrap_or(col);
            if a[pivot * n + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let d = a[col * n + col];
            det *= d;
            for i in col + 1..n {
                let f = a[i * n + col] / d;
                if f != 0.0 {
                    for j in col..n {
                        a[i * n + j] -= f * a[col * n + j];
                    }
                }
            }
        }
        det
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &MatrixR) -> Result<MatrixR, LinalgError> {
        if self.n != rhs.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: rhs.n,
            });
        }
        let mut out = MatrixR::zeros(self.n);
        matmul_into(self, rhs, &mut out);
        Ok(out)
    }
}

/// `out = a · b` for equal-sized matrices; i-k-j loop order for contiguous rows.
pub(crate) fn matmul_into(a: &MatrixR, b: &MatrixR, out: &mut MatrixR) {
    let n = a.n;
    debug_assert!(b.n == n && out.n == n);
    out.data.iter_mut().for_each(|x| *x = 0.0);
    for i in 0..n {
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a.data[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let b_row = &b.data[k * n..(k + 1) * n];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
}

impl Index<(usize, usize)> for MatrixR {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for MatrixR {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &MatrixR {
    type Output = MatrixR;

    /// Panics on a dimension mismatch; use [`MatrixR::matmul`] for the fallible form.
    fn mul(self, rhs: &MatrixR) -> MatrixR {
        self.matmul(rhs).expect("matrix dimensions must agree")
    }
}

impl fmt::Debug for MatrixR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MatrixR({}x{}) [", self.n, self.n)?;
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}
