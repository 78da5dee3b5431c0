use faer::{ColRef, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Truncated SVD triple `U diag(sigma) Vᵀ` of an off-diagonal block.
///
/// `sigma` is nonincreasing and strictly positive, `U` and `V` have
/// orthonormal columns. `tol` records the relative threshold used to
/// produce the factor.
#[derive(Clone, Debug)]
pub struct LowRankFactor {
    u: Mat<f64>,
    sigma: Vec<f64>,
    v: Mat<f64>,
    tol: f64,
}

impl LowRankFactor {
    pub fn zero(rows: usize, cols: usize, tol: f64) -> Self {
        LowRankFactor {
            u: Mat::zeros(rows, 0),
            sigma: Vec::new(),
            v: Mat::zeros(cols, 0),
            tol,
        }
    }

    /// Assembles a factor from its parts, validating the invariants.
    pub fn from_parts(u: DenseMatrix, sigma: Vec<f64>, v: DenseMatrix, tol: f64) -> Result<Self> {
        let r = sigma.len();
        if u.cols() != r || v.cols() != r {
            return Err(Error::Shape {
                op: "low-rank factor",
                expected: (u.rows(), r),
                found: (u.rows(), u.cols()),
            });
        }
        if r > u.rows().min(v.rows()) {
            return Err(Error::InvalidArgument(format!(
                "rank {r} exceeds min({}, {})",
                u.rows(),
                v.rows()
            )));
        }
        if sigma.iter().any(|s| !(*s > 0.0)) || sigma.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "singular values must be positive and nonincreasing".into(),
            ));
        }
        let f = LowRankFactor {
            u: u.into_faer(),
            sigma,
            v: v.into_faer(),
            tol,
        };
        let err = f.orthonormality_error();
        if err > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "factor columns are not orthonormal (max deviation {err:.3e})"
            )));
        }
        Ok(f)
    }

    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn u(&self) -> MatRef<'_, f64> {
        self.u.as_ref()
    }

    pub fn v(&self) -> MatRef<'_, f64> {
        self.v.as_ref()
    }

    pub fn u_dense(&self) -> DenseMatrix {
        DenseMatrix::wrap(self.u.clone())
    }

    pub fn v_dense(&self) -> DenseMatrix {
        DenseMatrix::wrap(self.v.clone())
    }

    /// Number of stored floating point values.
    pub fn stored_scalars(&self) -> usize {
        self.rank() * (self.rows() + self.cols() + 1)
    }

    /// `U diag(sigma)`.
    pub(crate) fn u_sigma(&self) -> Mat<f64> {
        Mat::from_fn(self.rows(), self.rank(), |i, j| self.u[(i, j)] * self.sigma[j])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        if self.rank() == 0 {
            return DenseMatrix::zeros(self.rows(), self.cols());
        }
        DenseMatrix::wrap(self.u_sigma() * self.v.transpose())
    }

    pub fn transpose(&self) -> LowRankFactor {
        LowRankFactor {
            u: self.v.clone(),
            sigma: self.sigma.clone(),
            v: self.u.clone(),
            tol: self.tol,
        }
    }

    /// `alpha * self`, keeping the factor in canonical form.
    pub fn scaled(&self, alpha: f64) -> LowRankFactor {
        if alpha == 0.0 {
            return LowRankFactor::zero(self.rows(), self.cols(), self.tol);
        }
        let sign = alpha.signum();
        LowRankFactor {
            u: Mat::from_fn(self.rows(), self.rank(), |i, j| sign * self.u[(i, j)]),
            sigma: self.sigma.iter().map(|s| s * alpha.abs()).collect(),
            v: self.v.clone(),
            tol: self.tol,
        }
    }

    /// Max-abs deviation of `UᵀU` and `VᵀV` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rank();
        let mut err: f64 = 0.0;
        for m in [&self.u, &self.v] {
            let g = m.transpose() * m;
            for j in 0..r {
                for i in 0..r {
                    let target = if i == j { 1.0 } else { 0.0 };
                    err = err.max((g[(i, j)] - target).abs());
                }
            }
        }
        err
    }
}

/// Number of leading singular values kept: `sigma_j > tol * sigma_1`,
/// `sigma_j > floor`, at most `max_rank`. Ties at the threshold are dropped.
fn truncation_rank(sigma: &[f64], tol: f64, floor: f64, max_rank: Option<usize>) -> usize {
    let Some(&s1) = sigma.first() else {
        return 0;
    };
    let threshold = (tol * s1).max(floor);
    let kept = sigma.iter().take_while(|&&s| s > threshold && s > 0.0).count();
    max_rank.map_or(kept, |cap| kept.min(cap))
}

/// Truncated reduced SVD of `a`: keeps the singular values strictly above
/// `tol * sigma_1`, and at most `max_rank` of them.
///
/// Only the bounding box of the nonzero entries is decomposed, so exactly
/// sparse blocks (banded corners, zero blocks) are compressed exactly.
pub fn truncated_svd(a: &DenseMatrix, tol: f64, max_rank: Option<usize>) -> Result<LowRankFactor> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("truncation tolerance {tol} must be >= 0")));
    }
    truncated_svd_ref(a.as_faer(), tol, max_rank)
}

pub(crate) fn truncated_svd_ref(a: MatRef<'_, f64>, tol: f64, max_rank: Option<usize>) -> Result<LowRankFactor> {
    let (m, n) = (a.nrows(), a.ncols());
    let (mut r0, mut r1, mut c0, mut c1) = (m, 0, n, 0);
    for j in 0..n {
        for i in 0..m {
            if a[(i, j)] != 0.0 {
                r0 = r0.min(i);
                r1 = r1.max(i + 1);
                c0 = c0.min(j);
                c1 = c1.max(j + 1);
            }
        }
    }
    if r1 == 0 {
        return Ok(LowRankFactor::zero(m, n, tol));
    }
    let sub = a.submatrix(r0, c0, r1 - r0, c1 - c0);
    let svd = sub.thin_svd().map_err(|_| Error::SvdFailed { rows: m, cols: n })?;
    let (order, sigma) = descending(svd.S().column_vector());
    let r = truncation_rank(&sigma, tol, 0.0, max_rank);
    let (su, sv) = (svd.U(), svd.V());
    let mut u = Mat::zeros(m, r);
    let mut v = Mat::zeros(n, r);
    for (k, &c) in order[..r].iter().enumerate() {
        for i in 0..(r1 - r0) {
            u[(r0 + i, k)] = su[(i, c)];
        }
        for j in 0..(c1 - c0) {
            v[(c0 + j, k)] = sv[(j, c)];
        }
    }
    Ok(LowRankFactor {
        u,
        sigma: sigma[..r].to_vec(),
        v,
        tol,
    })
}

/// Column order sorting `s` nonincreasingly, and the sorted values. faer
/// does not order its output on every code path.
fn descending(s: ColRef<'_, f64>) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let sigma = order.iter().map(|&i| s[i].max(0.0)).collect();
    (order, sigma)
}

pub(crate) fn hcat(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let (ka, kb) = (a.ncols(), b.ncols());
    Mat::from_fn(a.nrows(), ka + kb, |i, j| if j < ka { a[(i, j)] } else { b[(i, j - ka)] })
}

/// Recompresses the block `x yᵀ` (x: m×p, y: n×p) into a truncated factor:
/// thin QR of both sides, SVD of the small `R_x R_yᵀ` core.
///
/// Singular values below the rounding level of the operands
/// (`4 eps ‖x‖_F ‖y‖_F`) are dropped along with those under `tol * sigma_1`.
pub(crate) fn recompress(
    x: MatRef<'_, f64>,
    y: MatRef<'_, f64>,
    tol: f64,
    max_rank: Option<usize>,
) -> Result<LowRankFactor> {
    let (m, n, p) = (x.nrows(), y.nrows(), x.ncols());
    assert_eq!(p, y.ncols());
    if p == 0 || m == 0 || n == 0 {
        return Ok(LowRankFactor::zero(m, n, tol));
    }
    let floor = 4.0 * f64::EPSILON * x.norm_l2() * y.norm_l2();
    if !(floor > 0.0) {
        return Ok(LowRankFactor::zero(m, n, tol));
    }
    let qx = x.qr();
    let qy = y.qr();
    let core = qx.thin_R() * qy.thin_R().transpose();
    let svd = core.thin_svd().map_err(|_| Error::SvdFailed {
        rows: core.nrows(),
        cols: core.ncols(),
    })?;
    let (order, sigma) = descending(svd.S().column_vector());
    let r = truncation_rank(&sigma, tol, floor, max_rank);
    if r == 0 {
        return Ok(LowRankFactor::zero(m, n, tol));
    }
    let (su, sv) = (svd.U(), svd.V());
    let u = qx.compute_thin_Q() * Mat::from_fn(su.nrows(), r, |i, k| su[(i, order[k])]);
    let v = qy.compute_thin_Q() * Mat::from_fn(sv.nrows(), r, |j, k| sv[(j, order[k])]);
    Ok(LowRankFactor {
        u,
        sigma: sigma[..r].to_vec(),
        v,
        tol,
    })
}

/// `f1 + f2`, recompressed at relative tolerance `tol`.
pub fn lowrank_add(f1: &LowRankFactor, f2: &LowRankFactor, tol: f64) -> Result<LowRankFactor> {
    if (f1.rows(), f1.cols()) != (f2.rows(), f2.cols()) {
        return Err(Error::Shape {
            op: "lowrank_add",
            expected: (f1.rows(), f1.cols()),
            found: (f2.rows(), f2.cols()),
        });
    }
    if f1.rank() == 0 && f2.rank() == 0 {
        return Ok(LowRankFactor::zero(f1.rows(), f1.cols(), tol));
    }
    let x = hcat(f1.u_sigma().as_ref(), f2.u_sigma().as_ref());
    let y = hcat(f1.v(), f2.v());
    recompress(x.as_ref(), y.as_ref(), tol, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_outer_product() {
        let u = [1.0, -2.0, 0.5];
        let v = [3.0, 1.0];
        let a = DenseMatrix::from_fn(3, 2, |i, j| u[i] * v[j]);
        let f = truncated_svd(&a, 1e-12, None).unwrap();
        assert_eq!(f.rank(), 1);
        let expected = (1.0f64 + 4.0 + 0.25).sqrt() * (9.0f64 + 1.0).sqrt();
        assert!((f.sigma()[0] - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn identity_keeps_full_rank() {
        let f = truncated_svd(&DenseMatrix::identity(4), 0.0, None).unwrap();
        assert_eq!(f.rank(), 4);
        assert!(f.sigma().iter().all(|s| (s - 1.0).abs() < 1e-15));
    }

    #[test]
    fn zero_matrix_has_empty_factor() {
        let f = truncated_svd(&DenseMatrix::zeros(5, 3), 1e-8, None).unwrap();
        assert_eq!(f.rank(), 0);
        assert_eq!((f.rows(), f.cols()), (5, 3));
    }

    #[test]
    fn threshold_ties_are_dropped() {
        let a = DenseMatrix::from_row_major(2, 2, &[1.0, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(truncated_svd(&a, 0.5, None).unwrap().rank(), 1);
        assert_eq!(truncated_svd(&a, 0.4999, None).unwrap().rank(), 2);
    }

    #[test]
    fn max_rank_caps() {
        let f = truncated_svd(&DenseMatrix::identity(6), 0.0, Some(2)).unwrap();
        assert_eq!(f.rank(), 2);
    }

    #[test]
    fn negative_tolerance_rejected() {
        assert!(truncated_svd(&DenseMatrix::identity(2), -1.0, None).is_err());
    }

    #[test]
    fn cancellation_gives_rank_zero() {
        let a = DenseMatrix::from_fn(6, 5, |i, j| ((i + 1) * (j + 2)) as f64 + (i * j) as f64 * 0.3);
        let f = truncated_svd(&a, 1e-14, None).unwrap();
        let sum = lowrank_add(&f, &f.scaled(-1.0), 1e-14).unwrap();
        assert_eq!(sum.rank(), 0);
    }

    #[test]
    fn doubling_rank_one() {
        let a = DenseMatrix::from_fn(4, 4, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
        let f = truncated_svd(&a, 1e-12, None).unwrap();
        let g = lowrank_add(&f, &f, 1e-12).unwrap();
        assert_eq!(g.rank(), 1);
        assert!((g.sigma()[0] - 2.0 * f.sigma()[0]).abs() < 1e-13 * f.sigma()[0]);
    }

    #[test]
    fn add_shape_mismatch() {
        let f = LowRankFactor::zero(3, 3, 0.0);
        let g = LowRankFactor::zero(3, 4, 0.0);
        assert!(matches!(lowrank_add(&f, &g, 0.0), Err(Error::Shape { .. })));
    }

    #[test]
    fn from_parts_validates() {
        let u = DenseMatrix::from_row_major(2, 1, &[1.0, 0.0]).unwrap();
        let v = DenseMatrix::from_row_major(2, 1, &[0.0, 1.0]).unwrap();
        assert!(LowRankFactor::from_parts(u.clone(), vec![2.0], v.clone(), 0.0).is_ok());
        assert!(LowRankFactor::from_parts(u.clone(), vec![-2.0], v.clone(), 0.0).is_err());
        let bad = DenseMatrix::from_row_major(2, 1, &[2.0, 0.0]).unwrap();
        assert!(LowRankFactor::from_parts(bad, vec![1.0], v, 0.0).is_err());
    }
}
