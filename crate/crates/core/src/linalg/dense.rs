use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, MatRef};

use crate::error::{Error, Result};

/// Real dense matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix(Mat<f64>);

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix({}x{}) ", self.rows(), self.cols())?;
        fmt::Debug::fmt(&self.0, f)
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix(Mat::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        DenseMatrix(Mat::identity(n, n))
    }

    /// Builds a matrix from a closure. Panics if the closure produces a
    /// non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let m = Mat::from_fn(rows, cols, |i, j| {
            let v = f(i, j);
            assert!(v.is_finite(), "non-finite entry at ({i}, {j})");
            v
        });
        DenseMatrix(m)
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Self::from_faer(Mat::from_fn(rows, cols, |i, j| data[i * cols + j]))
    }

    pub fn from_col_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Self::from_faer(Mat::from_fn(rows, cols, |i, j| data[j * rows + i]))
    }

    /// Wraps a faer matrix after checking that every entry is finite.
    pub fn from_faer(m: Mat<f64>) -> Result<Self> {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if !m[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(DenseMatrix(m))
    }

    pub(crate) fn wrap(m: Mat<f64>) -> Self {
        DenseMatrix(m)
    }

    /// Square matrix with constant diagonals: `diagonals[d]` is placed on
    /// offset `d - lower`, so `diagonals.len() == lower + 1 + upper`.
    pub fn banded_toeplitz(n: usize, lower: usize, diagonals: &[f64]) -> Self {
        DenseMatrix::from_fn(n, n, |i, j| {
            let offset = j as isize - i as isize + lower as isize;
            if offset >= 0 && (offset as usize) < diagonals.len() {
                diagonals[offset as usize]
            } else {
                0.0
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(value.is_finite());
        self.0[(i, j)] = value;
    }

    pub fn as_faer(&self) -> MatRef<'_, f64> {
        self.0.as_ref()
    }

    pub fn into_faer(self) -> Mat<f64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix(self.0.transpose().to_owned())
    }

    pub fn submatrix(&self, row: usize, col: usize, nrows: usize, ncols: usize) -> DenseMatrix {
        DenseMatrix(self.0.submatrix(row, col, nrows, ncols).to_owned())
    }

    pub fn scale(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix(Mat::from_fn(self.rows(), self.cols(), |i, j| alpha * self.0[(i, j)]))
    }

    /// `self + alpha * I`.
    pub fn shift_diagonal(&self, alpha: f64) -> DenseMatrix {
        let mut out = self.0.clone();
        for i in 0..self.rows().min(self.cols()) {
            out[(i, i)] += alpha;
        }
        DenseMatrix(out)
    }

    fn check_same_shape(&self, other: &DenseMatrix, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape {
                op,
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other, "add")?;
        Ok(DenseMatrix(&self.0 + &other.0))
    }

    pub fn try_sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other, "sub")?;
        Ok(DenseMatrix(&self.0 - &other.0))
    }

    pub fn try_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols() != other.rows() {
            return Err(Error::Shape {
                op: "matmul",
                expected: (self.cols(), other.cols()),
                found: other.shape(),
            });
        }
        Ok(DenseMatrix(&self.0 * &other.0))
    }

    /// Inverse via LU with partial pivoting. Fails when a pivot is
    /// negligible relative to the largest one.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        if !self.is_square() {
            return Err(Error::Shape {
                op: "inverse",
                expected: (self.rows(), self.rows()),
                found: self.shape(),
            });
        }
        let n = self.rows();
        if n == 0 {
            return Ok(DenseMatrix::zeros(0, 0));
        }
        let lu = self.0.partial_piv_lu();
        check_pivots(lu.U(), "dense inverse")?;
        let inv = lu.inverse();
        DenseMatrix::from_faer(inv).map_err(|_| Error::singular("dense inverse"))
    }

    /// Solves `self * x = rhs`.
    pub fn solve(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if !self.is_square() || self.rows() != rhs.rows() {
            return Err(Error::Shape {
                op: "solve",
                expected: (self.rows(), rhs.cols()),
                found: rhs.shape(),
            });
        }
        if self.rows() == 0 {
            return Ok(rhs.clone());
        }
        let lu = self.0.partial_piv_lu();
        check_pivots(lu.U(), "dense solve")?;
        let x = lu.solve(&rhs.0);
        DenseMatrix::from_faer(x).map_err(|_| Error::singular("dense solve"))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| self.0[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.0.norm_l2()
    }

    pub fn norm_max(&self) -> f64 {
        self.0.norm_max()
    }

    /// Spectral norm.
    pub fn norm2(&self) -> f64 {
        spectral_norm(self.as_faer())
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        singular_values(self.as_faer())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)]).sum())
            .collect()
    }

    /// Largest `|i - j|` over nonzero entries.
    pub fn half_bandwidth(&self) -> usize {
        let mut band = 0;
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                if self.0[(i, j)] != 0.0 {
                    band = band.max(i.abs_diff(j));
                }
            }
        }
        band
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        let mut d: f64 = 0.0;
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                d = d.max((self.0[(i, j)] - other.0[(i, j)]).abs());
            }
        }
        d
    }

    pub fn min_entry(&self) -> f64 {
        let mut m = f64::INFINITY;
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                m = m.min(self.0[(i, j)]);
            }
        }
        m
    }
}

pub(crate) fn check_pivots(u: MatRef<'_, f64>, context: &str) -> Result<()> {
    let n = u.nrows().min(u.ncols());
    let mut max_pivot: f64 = 0.0;
    let mut min_pivot = f64::INFINITY;
    for i in 0..n {
        let p = u[(i, i)].abs();
        max_pivot = max_pivot.max(p);
        min_pivot = min_pivot.min(p);
    }
    if !(max_pivot > 0.0) || !min_pivot.is_finite() || min_pivot <= max_pivot * f64::EPSILON * n as f64 {
        return Err(Error::singular(context));
    }
    Ok(())
}

pub(crate) fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    let mut s = a.singular_values().map_err(|_| Error::SvdFailed {
        rows: a.nrows(),
        cols: a.ncols(),
    })?;
    for v in s.iter_mut() {
        *v = v.max(0.0);
    }
    // Not every faer code path returns the values in order.
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Spectral norm: exact SVD for small matrices, power iteration on `AᵀA`
/// otherwise (converged to 1e-12 relative change).
pub(crate) fn spectral_norm(a: MatRef<'_, f64>) -> f64 {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return 0.0;
    }
    if m.min(n) <= 200 {
        if let Ok(s) = singular_values(a) {
            return s.first().copied().unwrap_or(0.0);
        }
    }
    let mut x = Mat::<f64>::from_fn(n, 1, |i, _| 1.0 + (i % 7) as f64 * 0.1);
    let mut est = 0.0;
    for _ in 0..2000 {
        let nx = x.norm_l2();
        if nx == 0.0 {
            return 0.0;
        }
        x = x * faer::Scale(1.0 / nx);
        let y = a * &x;
        let z = a.transpose() * &y;
        let new_est = y.norm_l2();
        x = z;
        if (new_est - est).abs() <= 1e-12 * new_est {
            return new_est;
        }
        est = new_est;
    }
    est
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl Add<&DenseMatrix> for &DenseMatrix {
    type Output = DenseMatrix;

    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 + &rhs.0)
    }
}

impl Sub<&DenseMatrix> for &DenseMatrix {
    type Output = DenseMatrix;

    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<&DenseMatrix> for &DenseMatrix {
    type Output = DenseMatrix;

    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 * &rhs.0)
    }
}

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;

    fn neg(self) -> DenseMatrix {
        self.scale(-1.0)
    }
}
