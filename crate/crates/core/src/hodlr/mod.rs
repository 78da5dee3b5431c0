//! Hierarchical off-diagonal low-rank matrices with rank-adaptive arithmetic.
//!
//! An [`HMatrix`] of size `n > leaf_size` is split as `n1 = floor(n/2)`,
//! `n2 = ceil(n/2)`; the diagonal blocks recurse and the off-diagonal blocks
//! are stored as [`LowRankFactor`]s truncated at `tol`.

mod arith;
mod io;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{truncated_svd_ref, DenseMatrix, LowRankFactor};

pub use arith::{h_add, h_invert, h_mul, h_sub};
pub use io::{load, save};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticConfig {
    /// Relative truncation threshold for off-diagonal blocks.
    pub tol: f64,
    pub leaf_size: usize,
    pub max_rank: Option<usize>,
}

impl Default for ArithmeticConfig {
    fn default() -> Self {
        ArithmeticConfig {
            tol: 1e-14,
            leaf_size: 64,
            max_rank: None,
        }
    }
}

impl ArithmeticConfig {
    pub fn with_tol(tol: f64) -> Self {
        ArithmeticConfig {
            tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidArgument(format!("tol must be finite and >= 0, got {}", self.tol)));
        }
        if self.leaf_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "leaf_size must be >= 2, got {}",
                self.leaf_size
            )));
        }
        if self.max_rank == Some(0) {
            return Err(Error::InvalidArgument("max_rank must be positive when given".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct HMatrix {
    size: usize,
    leaf_size: usize,
    kind: Kind,
}

#[derive(Clone, Debug)]
pub(crate) enum Kind {
    Leaf(DenseMatrix),
    Node(Box<Node>),
}

#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub(crate) a11: HMatrix,
    pub(crate) a22: HMatrix,
    pub(crate) a21: LowRankFactor,
    pub(crate) a12: LowRankFactor,
}

/// Child path label used in diagnostics: `root`, `root.11`, `root.11.22`, ...
pub(crate) fn child_path(path: &str, which: &str) -> String {
    format!("{path}.{which}")
}

impl HMatrix {
    pub(crate) fn leaf(d: DenseMatrix, leaf_size: usize) -> HMatrix {
        HMatrix {
            size: d.rows(),
            leaf_size,
            kind: Kind::Leaf(d),
        }
    }

    pub(crate) fn node(a11: HMatrix, a22: HMatrix, a21: LowRankFactor, a12: LowRankFactor) -> HMatrix {
        debug_assert_eq!(a21.rows(), a22.size);
        debug_assert_eq!(a12.rows(), a11.size);
        HMatrix {
            size: a11.size + a22.size,
            leaf_size: a11.leaf_size,
            kind: Kind::Node(Box::new(Node { a11, a22, a21, a12 })),
        }
    }

    pub(crate) fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, Kind::Leaf(_))
    }

    /// Number of levels below the root; 0 for a single leaf.
    pub fn depth(&self) -> usize {
        match &self.kind {
            Kind::Leaf(_) => 0,
            Kind::Node(n) => 1 + n.a11.depth().max(n.a22.depth()),
        }
    }

    /// Hierarchical approximation of a square matrix.
    pub fn from_dense(a: &DenseMatrix, cfg: &ArithmeticConfig) -> Result<HMatrix> {
        build_from_dense(a, cfg)
    }

    /// `alpha * I` with empty off-diagonal factors.
    pub fn scaled_identity(n: usize, alpha: f64, cfg: &ArithmeticConfig) -> HMatrix {
        if n <= cfg.leaf_size {
            return HMatrix::leaf(DenseMatrix::identity(n).scale(alpha), cfg.leaf_size);
        }
        let n1 = n / 2;
        let n2 = n - n1;
        HMatrix::node(
            HMatrix::scaled_identity(n1, alpha, cfg),
            HMatrix::scaled_identity(n2, alpha, cfg),
            LowRankFactor::zero(n2, n1, cfg.tol),
            LowRankFactor::zero(n1, n2, cfg.tol),
        )
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = Mat::zeros(self.size, self.size);
        self.write_dense(&mut out, 0);
        DenseMatrix::wrap(out)
    }

    fn write_dense(&self, out: &mut Mat<f64>, off: usize) {
        match &self.kind {
            Kind::Leaf(d) => {
                let a = d.as_faer();
                for j in 0..self.size {
                    for i in 0..self.size {
                        out[(off + i, off + j)] = a[(i, j)];
                    }
                }
            }
            Kind::Node(n) => {
                let n1 = n.a11.size;
                n.a11.write_dense(out, off);
                n.a22.write_dense(out, off + n1);
                for (f, r0, c0) in [(&n.a21, off + n1, off), (&n.a12, off, off + n1)] {
                    if f.rank() == 0 {
                        continue;
                    }
                    let b = f.u_sigma() * f.v().transpose();
                    for j in 0..b.ncols() {
                        for i in 0..b.nrows() {
                            out[(r0 + i, c0 + j)] = b[(i, j)];
                        }
                    }
                }
            }
        }
    }

    /// `self * x` for a dense block of columns.
    pub fn mul_dense(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(x.nrows(), self.size, "mul_dense: row mismatch");
        match &self.kind {
            Kind::Leaf(d) => d.as_faer() * x,
            Kind::Node(n) => {
                let n1 = n.a11.size;
                let (x1, x2) = x.split_at_row(n1);
                let mut y1 = n.a11.mul_dense(x1);
                let mut y2 = n.a22.mul_dense(x2);
                if n.a12.rank() > 0 {
                    y1 += n.a12.u_sigma() * (n.a12.v().transpose() * x2);
                }
                if n.a21.rank() > 0 {
                    y2 += n.a21.u_sigma() * (n.a21.v().transpose() * x1);
                }
                vstack(y1, y2)
            }
        }
    }

    /// `selfᵀ * x`.
    pub fn tmul_dense(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(x.nrows(), self.size, "tmul_dense: row mismatch");
        match &self.kind {
            Kind::Leaf(d) => d.as_faer().transpose() * x,
            Kind::Node(n) => {
                let n1 = n.a11.size;
                let (x1, x2) = x.split_at_row(n1);
                let mut y1 = n.a11.tmul_dense(x1);
                let mut y2 = n.a22.tmul_dense(x2);
                // (A21)ᵀ maps the second block row onto the first block column.
                if n.a21.rank() > 0 {
                    y1 += n.a21.v() * (n.a21.u_sigma().transpose() * x2);
                }
                if n.a12.rank() > 0 {
                    y2 += n.a12.v() * (n.a12.u_sigma().transpose() * x1);
                }
                vstack(y1, y2)
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = Mat::from_fn(x.len(), 1, |i, _| x[i]);
        let y = self.mul_dense(m.as_ref());
        (0..y.nrows()).map(|i| y[(i, 0)]).collect()
    }

    pub fn scale(&self, alpha: f64) -> HMatrix {
        match &self.kind {
            Kind::Leaf(d) => HMatrix::leaf(d.scale(alpha), self.leaf_size),
            Kind::Node(n) => HMatrix::node(
                n.a11.scale(alpha),
                n.a22.scale(alpha),
                n.a21.scaled(alpha),
                n.a12.scaled(alpha),
            ),
        }
    }

    /// `self + alpha * I`.
    pub fn shift_diagonal(&self, alpha: f64) -> HMatrix {
        match &self.kind {
            Kind::Leaf(d) => HMatrix::leaf(d.shift_diagonal(alpha), self.leaf_size),
            Kind::Node(n) => HMatrix::node(
                n.a11.shift_diagonal(alpha),
                n.a22.shift_diagonal(alpha),
                n.a21.clone(),
                n.a12.clone(),
            ),
        }
    }

    /// Maximum absolute row sum, with low-rank blocks formed exactly in row
    /// panels.
    pub fn norm_inf(&self) -> f64 {
        let mut sums = vec![0.0; self.size];
        self.accumulate_abs_row_sums(&mut sums, 0);
        sums.into_iter().fold(0.0, f64::max)
    }

    fn accumulate_abs_row_sums(&self, sums: &mut [f64], off: usize) {
        const PANEL: usize = 256;
        match &self.kind {
            Kind::Leaf(d) => {
                let a = d.as_faer();
                for j in 0..self.size {
                    for i in 0..self.size {
                        sums[off + i] += a[(i, j)].abs();
                    }
                }
            }
            Kind::Node(n) => {
                let n1 = n.a11.size;
                n.a11.accumulate_abs_row_sums(sums, off);
                n.a22.accumulate_abs_row_sums(sums, off + n1);
                for (f, r0) in [(&n.a12, off), (&n.a21, off + n1)] {
                    if f.rank() == 0 {
                        continue;
                    }
                    let us = f.u_sigma();
                    let vt = f.v().transpose();
                    let mut start = 0;
                    while start < us.nrows() {
                        let len = PANEL.min(us.nrows() - start);
                        let panel = us.get(start..start + len, ..) * vt;
                        for j in 0..panel.ncols() {
                            for i in 0..len {
                                sums[r0 + start + i] += panel[(i, j)].abs();
                            }
                        }
                        start += len;
                    }
                }
            }
        }
    }

    /// Largest off-diagonal rank anywhere in the tree; 0 for a leaf.
    pub fn max_offdiag_rank(&self) -> usize {
        match &self.kind {
            Kind::Leaf(_) => 0,
            Kind::Node(n) => n
                .a21
                .rank()
                .max(n.a12.rank())
                .max(n.a11.max_offdiag_rank())
                .max(n.a22.max_offdiag_rank()),
        }
    }

    /// Floating point values held by leaves and factors.
    pub fn stored_scalars(&self) -> usize {
        match &self.kind {
            Kind::Leaf(_) => self.size * self.size,
            Kind::Node(n) => {
                n.a11.stored_scalars() + n.a22.stored_scalars() + n.a21.stored_scalars() + n.a12.stored_scalars()
            }
        }
    }

    /// Off-diagonal factors of the nodes at `level` (0 = root), in
    /// left-to-right order.
    fn factors_at_level(&self, level: usize, path: String, out: &mut Vec<BlockSpectrum>, offset: usize) {
        let Kind::Node(n) = &self.kind else {
            return;
        };
        let n1 = n.a11.size;
        if level == 0 {
            for (which, f, r, c) in [("21", &n.a21, offset + n1, offset), ("12", &n.a12, offset, offset + n1)] {
                out.push(BlockSpectrum {
                    path: child_path(&path, which),
                    row: r,
                    col: c,
                    rows: f.rows(),
                    cols: f.cols(),
                    sigma: f.sigma().to_vec(),
                });
            }
            return;
        }
        n.a11.factors_at_level(level - 1, child_path(&path, "11"), out, offset);
        n.a22.factors_at_level(level - 1, child_path(&path, "22"), out, offset + n1);
    }

    pub fn stats(&self) -> HStats {
        let depth = self.depth();
        let mut ranks_per_level = vec![Vec::new(); depth];
        self.collect_ranks(0, &mut ranks_per_level);
        HStats {
            schema_version: 1,
            size: self.size,
            leaf_size: self.leaf_size,
            depth,
            stored_scalars: self.stored_scalars(),
            dense_scalars: self.size * self.size,
            max_rank: self.max_offdiag_rank(),
            ranks_per_level,
        }
    }

    fn collect_ranks(&self, level: usize, out: &mut [Vec<usize>]) {
        if let Kind::Node(n) = &self.kind {
            out[level].push(n.a21.rank());
            out[level].push(n.a12.rank());
            n.a11.collect_ranks(level + 1, out);
            n.a22.collect_ranks(level + 1, out);
        }
    }
}

fn vstack(a: Mat<f64>, b: Mat<f64>) -> Mat<f64> {
    let n1 = a.nrows();
    Mat::from_fn(n1 + b.nrows(), a.ncols(), |i, j| if i < n1 { a[(i, j)] } else { b[(i - n1, j)] })
}

/// Hierarchical approximation of `a`: every off-diagonal block is replaced by
/// its truncated SVD at `cfg.tol`.
pub fn build_from_dense(a: &DenseMatrix, cfg: &ArithmeticConfig) -> Result<HMatrix> {
    cfg.validate()?;
    if !a.is_square() {
        return Err(Error::Shape {
            op: "build_from_dense",
            expected: (a.rows(), a.rows()),
            found: a.shape(),
        });
    }
    build_ref(a.as_faer(), cfg)
}

fn build_ref(a: MatRef<'_, f64>, cfg: &ArithmeticConfig) -> Result<HMatrix> {
    let n = a.nrows();
    if n <= cfg.leaf_size {
        return Ok(HMatrix::leaf(DenseMatrix::wrap(a.to_owned()), cfg.leaf_size));
    }
    let n1 = n / 2;
    let n2 = n - n1;
    let a11 = build_ref(a.submatrix(0, 0, n1, n1), cfg)?;
    let a22 = build_ref(a.submatrix(n1, n1, n2, n2), cfg)?;
    let a21 = truncated_svd_ref(a.submatrix(n1, 0, n2, n1), cfg.tol, cfg.max_rank)?;
    let a12 = truncated_svd_ref(a.submatrix(0, n1, n1, n2), cfg.tol, cfg.max_rank)?;
    Ok(HMatrix::node(a11, a22, a21, a12))
}

/// Stored singular values of one off-diagonal block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpectrum {
    /// Tree path, e.g. `root.11.21` for the lower-left block of the leading
    /// diagonal block.
    pub path: String,
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
    pub sigma: Vec<f64>,
}

/// σ lists of every off-diagonal factor at `level` (0 = root split).
///
/// A tree that is a single leaf has no off-diagonal blocks and yields an
/// empty list at level 0. Otherwise `level` must be below the depth.
pub fn h_offdiag_singular_values(h: &HMatrix, level: usize) -> Result<Vec<BlockSpectrum>> {
    let depth = h.depth();
    if level >= depth.max(1) {
        return Err(Error::InvalidArgument(format!(
            "level {level} out of range for a tree of depth {depth}"
        )));
    }
    let mut out = Vec::new();
    h.factors_at_level(level, "root".into(), &mut out, 0);
    Ok(out)
}

/// Memory and rank statistics of an [`HMatrix`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HStats {
    pub schema_version: u32,
    pub size: usize,
    pub leaf_size: usize,
    pub depth: usize,
    pub stored_scalars: usize,
    pub dense_scalars: usize,
    pub max_rank: usize,
    /// Ranks of the `(21, 12)` factor pairs at each level, left to right.
    pub ranks_per_level: Vec<Vec<usize>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(leaf: usize, tol: f64) -> ArithmeticConfig {
        ArithmeticConfig {
            tol,
            leaf_size: leaf,
            max_rank: None,
        }
    }

    #[test]
    fn identity_has_empty_corners() {
        let h = build_from_dense(&DenseMatrix::identity(40), &cfg(4, 1e-12)).unwrap();
        assert_eq!(h.max_offdiag_rank(), 0);
        assert_eq!(h.to_dense(), DenseMatrix::identity(40));
    }

    #[test]
    fn depth_follows_ceil_log2() {
        for (n, leaf) in [(16, 4), (17, 4), (100, 64), (129, 64), (64, 64), (1000, 64), (5, 2)] {
            let h = build_from_dense(&DenseMatrix::identity(n), &cfg(leaf, 0.0)).unwrap();
            let expected = (n as f64 / leaf as f64).log2().ceil().max(0.0) as usize;
            assert_eq!(h.depth(), expected, "n={n} leaf={leaf}");
        }
    }

    #[test]
    fn hand_assembled_node() {
        let a = DenseMatrix::from_row_major(
            4,
            4,
            &[1.0, 2.0, 3.0, 6.0, 0.0, 1.0, 1.0, 2.0, 0.0, 8.0, 5.0, 0.0, 0.0, 8.0, 0.0, 5.0],
        )
        .unwrap();
        let h = build_from_dense(&a, &cfg(2, 0.0)).unwrap();
        let Kind::Node(n) = h.kind() else { panic!() };
        assert_eq!(n.a12.rank(), 1);
        assert_eq!(n.a21.rank(), 1);
        assert!((n.a21.sigma()[0] - 8.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(h.to_dense().max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn mul_dense_and_norm_match_dense() {
        let a = DenseMatrix::from_fn(37, 37, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let h = build_from_dense(&a, &cfg(5, 0.0)).unwrap();
        let x = Mat::from_fn(37, 3, |i, j| (i + j) as f64 * 0.1);
        let y = h.mul_dense(x.as_ref());
        let yt = h.tmul_dense(x.as_ref());
        let yd = a.as_faer() * &x;
        let ytd = a.as_faer().transpose() * &x;
        assert!((&y - &yd).norm_max() < 1e-11);
        assert!((&yt - &ytd).norm_max() < 1e-11);
        assert!((h.norm_inf() - a.norm_inf()).abs() < 1e-11);
    }

    #[test]
    fn level_spectra() {
        let a = DenseMatrix::banded_toeplitz(16, 1, &[0.5, 2.0, 0.25]);
        let h = build_from_dense(&a, &cfg(4, 0.0)).unwrap();
        let root = h_offdiag_singular_values(&h, 0).unwrap();
        assert_eq!(root.len(), 2);
        assert_eq!(root[0].sigma, vec![0.5]);
        assert_eq!(root[1].sigma, vec![0.25]);
        assert_eq!(h_offdiag_singular_values(&h, 1).unwrap().len(), 4);
        assert!(h_offdiag_singular_values(&h, 2).is_err());
        let leaf = build_from_dense(&a, &cfg(16, 0.0)).unwrap();
        assert!(h_offdiag_singular_values(&leaf, 0).unwrap().is_empty());
    }
}
