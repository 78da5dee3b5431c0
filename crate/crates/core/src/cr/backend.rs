use crate::error::Result;
use crate::hodlr::{self, ArithmeticConfig, HMatrix};
use crate::linalg::DenseMatrix;

/// Matrix arithmetic used by cyclic reduction.
pub trait Backend {
    type Matrix: Clone;

    fn name(&self) -> &'static str;
    /// Truncation threshold, `None` for exact (dense) arithmetic.
    fn tol(&self) -> Option<f64>;

    fn from_dense(&self, a: &DenseMatrix) -> Result<Self::Matrix>;
    fn to_dense(&self, a: &Self::Matrix) -> DenseMatrix;

    fn add(&self, a: &Self::Matrix, b: &Self::Matrix) -> Result<Self::Matrix>;
    fn sub(&self, a: &Self::Matrix, b: &Self::Matrix) -> Result<Self::Matrix>;
    fn mul(&self, a: &Self::Matrix, b: &Self::Matrix) -> Result<Self::Matrix>;
    fn scale(&self, a: &Self::Matrix, alpha: f64) -> Self::Matrix;
    fn shift_diagonal(&self, a: &Self::Matrix, alpha: f64) -> Self::Matrix;
    fn invert(&self, a: &Self::Matrix) -> Result<Self::Matrix>;

    fn norm_inf(&self, a: &Self::Matrix) -> f64;
    /// Largest stored off-diagonal rank; `None` when the representation has
    /// no rank structure.
    fn max_offdiag_rank(&self, a: &Self::Matrix) -> Option<usize>;
    fn apply(&self, a: &Self::Matrix, x: &[f64]) -> Vec<f64>;
}

/// [`DenseBackend`] zeroes entries of a product or inverse below
/// `UNDERFLOW_CUTOFF · max(1, ‖X‖_max)`. The decaying iterates and
/// `(A₀ − I)⁻¹` otherwise fill with subnormals, which run several times
/// slower than normal arithmetic; the dropped entries change nothing above
/// the rounding level.
pub const UNDERFLOW_CUTOFF: f64 = 1e-150;

fn flush_tiny(a: DenseMatrix) -> DenseMatrix {
    let cut = UNDERFLOW_CUTOFF * a.norm_max().max(1.0);
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        let v = a.get(i, j);
        if v.abs() < cut {
            0.0
        } else {
            v
        }
    })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DenseBackend;

impl Backend for DenseBackend {
    type Matrix = DenseMatrix;

    fn name(&self) -> &'static str {
        "dense"
    }

    fn tol(&self) -> Option<f64> {
        None
    }

    fn from_dense(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(a.clone())
    }

    fn to_dense(&self, a: &DenseMatrix) -> DenseMatrix {
        a.clone()
    }

    fn add(&self, a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
        a.try_add(b)
    }

    fn sub(&self, a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
        a.try_sub(b)
    }

    fn mul(&self, a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
        a.try_matmul(b).map(flush_tiny)
    }

    fn scale(&self, a: &DenseMatrix, alpha: f64) -> DenseMatrix {
        a.scale(alpha)
    }

    fn shift_diagonal(&self, a: &DenseMatrix, alpha: f64) -> DenseMatrix {
        a.shift_diagonal(alpha)
    }

    fn invert(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        a.inverse().map(flush_tiny)
    }

    fn norm_inf(&self, a: &DenseMatrix) -> f64 {
        a.norm_inf()
    }

    fn max_offdiag_rank(&self, _: &DenseMatrix) -> Option<usize> {
        None
    }

    fn apply(&self, a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
        let v = a.as_faer();
        (0..a.rows()).map(|i| (0..a.cols()).map(|j| v[(i, j)] * x[j]).sum()).collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HodlrBackend {
    pub cfg: ArithmeticConfig,
}

impl HodlrBackend {
    pub fn new(cfg: ArithmeticConfig) -> Self {
        HodlrBackend { cfg }
    }
}

impl Backend for HodlrBackend {
    type Matrix = HMatrix;

    fn name(&self) -> &'static str {
        "hodlr"
    }

    fn tol(&self) -> Option<f64> {
        Some(self.cfg.tol)
    }

    fn from_dense(&self, a: &DenseMatrix) -> Result<HMatrix> {
        hodlr::build_from_dense(a, &self.cfg)
    }

    fn to_dense(&self, a: &HMatrix) -> DenseMatrix {
        a.to_dense()
    }

    fn add(&self, a: &HMatrix, b: &HMatrix) -> Result<HMatrix> {
        hodlr::h_add(a, b, &self.cfg)
    }

    fn sub(&self, a: &HMatrix, b: &HMatrix) -> Result<HMatrix> {
        hodlr::h_sub(a, b, &self.cfg)
    }

    fn mul(&self, a: &HMatrix, b: &HMatrix) -> Result<HMatrix> {
        hodlr::h_mul(a, b, &self.cfg)
    }

    fn scale(&self, a: &HMatrix, alpha: f64) -> HMatrix {
        a.scale(alpha)
    }

    fn shift_diagonal(&self, a: &HMatrix, alpha: f64) -> HMatrix {
        a.shift_diagonal(alpha)
    }

    fn invert(&self, a: &HMatrix) -> Result<HMatrix> {
        hodlr::h_invert(a, &self.cfg)
    }

    fn norm_inf(&self, a: &HMatrix) -> f64 {
        a.norm_inf()
    }

    fn max_offdiag_rank(&self, a: &HMatrix) -> Option<usize> {
        Some(a.max_offdiag_rank())
    }

    fn apply(&self, a: &HMatrix, x: &[f64]) -> Vec<f64> {
        a.apply(x)
    }
}
