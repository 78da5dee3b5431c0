//! Dense kernels, low-rank factors and singular-value instrumentation.

mod complex;
mod dense;
mod lowrank;
pub mod mm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use complex::ComplexMatrix;
pub use dense::DenseMatrix;
pub use lowrank::{lowrank_add, truncated_svd, LowRankFactor};

pub(crate) use lowrank::{hcat, recompress, truncated_svd_ref};

use crate::error::{Error, Result};

/// An off-diagonal submatrix strictly inside the lower or upper triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffDiagonalSplit {
    /// Rows `row_start..m`, columns `0..col_end`, with `col_end <= row_start`.
    SouthWest { row_start: usize, col_end: usize },
    /// Rows `0..row_end`, columns `col_start..n`, with `row_end <= col_start`.
    NorthEast { row_end: usize, col_start: usize },
}

impl OffDiagonalSplit {
    /// Rows `m/2..m`, columns `0..m/2`: the lower-left block of the first
    /// bisection of an `m×m` matrix.
    pub fn largest_south_west(m: usize) -> Self {
        OffDiagonalSplit::SouthWest {
            row_start: m / 2,
            col_end: m / 2,
        }
    }

    /// `(row, col, nrows, ncols)` of the block inside an `m×n` matrix.
    pub fn block(&self, m: usize, n: usize) -> Result<(usize, usize, usize, usize)> {
        match *self {
            OffDiagonalSplit::SouthWest { row_start, col_end } => {
                if row_start >= m || col_end == 0 || col_end > n || col_end > row_start {
                    return Err(Error::InvalidArgument(format!(
                        "south-west split ({row_start}, {col_end}) is not strictly below the diagonal of a {m}x{n} matrix"
                    )));
                }
                Ok((row_start, 0, m - row_start, col_end))
            }
            OffDiagonalSplit::NorthEast { row_end, col_start } => {
                if col_start >= n || row_end == 0 || row_end > m || row_end > col_start {
                    return Err(Error::InvalidArgument(format!(
                        "north-east split ({row_end}, {col_start}) is not strictly above the diagonal of a {m}x{n} matrix"
                    )));
                }
                Ok((0, col_start, row_end, n - col_start))
            }
        }
    }

    pub fn extract(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        let (r, c, nr, nc) = self.block(a.rows(), a.cols())?;
        Ok(a.submatrix(r, c, nr, nc))
    }
}

impl fmt::Display for OffDiagonalSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffDiagonalSplit::SouthWest { row_start, col_end } => write!(f, "sw:{row_start},{col_end}"),
            OffDiagonalSplit::NorthEast { row_end, col_start } => write!(f, "ne:{row_end},{col_start}"),
        }
    }
}

impl FromStr for OffDiagonalSplit {
    type Err = Error;

    /// `sw:ROW_START,COL_END` or `ne:ROW_END,COL_START` (0-based, exclusive ends).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse split {s:?}; expected sw:R,C or ne:R,C"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let (a, b) = rest.split_once(',').ok_or_else(bad)?;
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "sw" => Ok(OffDiagonalSplit::SouthWest { row_start: a, col_end: b }),
            "ne" => Ok(OffDiagonalSplit::NorthEast { row_end: a, col_start: b }),
            _ => Err(bad()),
        }
    }
}

/// Full nonincreasing singular-value list of the off-diagonal block of `a`
/// selected by `split`.
pub fn offdiag_singular_values(a: &DenseMatrix, split: OffDiagonalSplit) -> Result<Vec<f64>> {
    split.extract(a)?.singular_values()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_corner() {
        let a = DenseMatrix::banded_toeplitz(8, 1, &[0.25, 2.0, -0.5]);
        let s = offdiag_singular_values(&a, OffDiagonalSplit::largest_south_west(8)).unwrap();
        assert_eq!(s.len(), 4);
        assert!((s[0] - 0.25).abs() < 1e-15);
        assert!(s[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_matrix() {
        let s = offdiag_singular_values(&DenseMatrix::zeros(6, 6), OffDiagonalSplit::largest_south_west(6)).unwrap();
        assert!(s.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn split_out_of_range() {
        let a = DenseMatrix::identity(4);
        let bad = OffDiagonalSplit::SouthWest { row_start: 1, col_end: 3 };
        assert!(offdiag_singular_values(&a, bad).is_err());
        let bad = OffDiagonalSplit::NorthEast { row_end: 2, col_start: 4 };
        assert!(offdiag_singular_values(&a, bad).is_err());
    }

    #[test]
    fn split_parse_roundtrip() {
        let s: OffDiagonalSplit = "ne:3,5".parse().unwrap();
        assert_eq!(s, OffDiagonalSplit::NorthEast { row_end: 3, col_start: 5 });
        assert_eq!(s.to_string().parse::<OffDiagonalSplit>().unwrap(), s);
        assert!("xx:1,2".parse::<OffDiagonalSplit>().is_err());
    }
}
