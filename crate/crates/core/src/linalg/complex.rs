use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Dense complex matrix, used for matrix-function evaluations at complex points.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(Mat<c64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix(Mat::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        ComplexMatrix(Mat::identity(n, n))
    }

    pub fn from_real(a: &DenseMatrix) -> Self {
        let r = a.as_faer();
        ComplexMatrix(Mat::from_fn(a.rows(), a.cols(), |i, j| c64::new(r[(i, j)], 0.0)))
    }

    /// `sum_k coeff_k * mats_k` for equally shaped real matrices.
    pub fn linear_combination(terms: &[(c64, &DenseMatrix)]) -> Self {
        let (rows, cols) = terms.first().map(|(_, m)| m.shape()).unwrap_or((0, 0));
        ComplexMatrix(Mat::from_fn(rows, cols, |i, j| {
            terms
                .iter()
                .fold(c64::new(0.0, 0.0), |acc, (c, m)| acc + *c * m.get(i, j))
        }))
    }

    pub fn as_faer(&self) -> MatRef<'_, c64> {
        self.0.as_ref()
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.0[(i, j)]
    }

    pub fn conj(&self) -> ComplexMatrix {
        ComplexMatrix(Mat::from_fn(self.rows(), self.cols(), |i, j| self.0[(i, j)].conj()))
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &other.0)
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &other.0)
    }

    pub fn scale(&self, alpha: c64) -> ComplexMatrix {
        ComplexMatrix(Mat::from_fn(self.rows(), self.cols(), |i, j| alpha * self.0[(i, j)]))
    }

    pub fn submatrix(&self, row: usize, col: usize, nrows: usize, ncols: usize) -> ComplexMatrix {
        ComplexMatrix(self.0.submatrix(row, col, nrows, ncols).to_owned())
    }

    pub fn inverse(&self) -> Result<ComplexMatrix> {
        self.inverse_relative_to(0.0)
    }

    /// Inverse that also treats pivots below `n eps scale` as zero, for
    /// matrices formed by cancellation from terms of size `scale`.
    pub fn inverse_relative_to(&self, scale: f64) -> Result<ComplexMatrix> {
        let n = self.rows();
        if n != self.cols() {
            return Err(Error::Shape {
                op: "complex inverse",
                expected: (n, n),
                found: (n, self.cols()),
            });
        }
        if n == 0 {
            return Ok(self.clone());
        }
        let lu = self.0.partial_piv_lu();
        let u = lu.U();
        let mut max_pivot: f64 = 0.0;
        let mut min_pivot = f64::INFINITY;
        for i in 0..n {
            let p = u[(i, i)].norm();
            max_pivot = max_pivot.max(p);
            min_pivot = min_pivot.min(p);
        }
        if !(max_pivot > 0.0) || min_pivot <= max_pivot.max(scale) * f64::EPSILON * n as f64 {
            return Err(Error::singular("complex inverse"));
        }
        let inv = lu.inverse();
        for j in 0..n {
            for i in 0..n {
                let v = inv[(i, j)];
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::singular("complex inverse"));
                }
            }
        }
        Ok(ComplexMatrix(inv))
    }

    pub fn norm_fro(&self) -> f64 {
        self.0.norm_l2()
    }

    pub fn norm_max(&self) -> f64 {
        self.0.norm_max()
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        if self.rows() == 0 || self.cols() == 0 {
            return Ok(Vec::new());
        }
        let mut s = self.0.singular_values().map_err(|_| Error::SvdFailed {
            rows: self.rows(),
            cols: self.cols(),
        })?;
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    }

    pub fn norm2(&self) -> Result<f64> {
        Ok(self.singular_values()?.first().copied().unwrap_or(0.0))
    }

    /// Entrywise modulus.
    pub fn abs(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows(), self.cols(), |i, j| self.0[(i, j)].norm())
    }
}
