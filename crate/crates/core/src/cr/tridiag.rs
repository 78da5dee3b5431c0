use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Solves the block tridiagonal block Toeplitz system
/// `L x_{i−1} + D x_i + U x_{i+1} = b_i`, `i = 0..n_blocks`, by odd-even
/// cyclic reduction. Each `rhs` block is `m × k`.
///
/// Systems whose block count is not `2^p − 1` are padded with identity
/// diagonal blocks, zero couplings and zero right-hand sides.
pub fn cr_solve_block_tridiag(
    diag: &DenseMatrix,
    lower: &DenseMatrix,
    upper: &DenseMatrix,
    rhs: &[DenseMatrix],
    n_blocks: usize,
) -> Result<Vec<DenseMatrix>> {
    if rhs.len() != n_blocks {
        return Err(Error::InvalidArgument(format!(
            "{n_blocks} blocks requested but {} right-hand side blocks given",
            rhs.len()
        )));
    }
    let n = n_blocks;
    let lowers = vec![lower.clone(); n];
    let uppers = vec![upper.clone(); n];
    let diags = vec![diag.clone(); n];
    cr_solve_block_tridiag_general(&diags, &lowers, &uppers, rhs)
}

/// Row-dependent variant: row `i` reads `lower[i] x_{i−1} + diag[i] x_i +
/// upper[i] x_{i+1} = rhs[i]`. `lower[0]` and `upper[n−1]` are ignored.
pub fn cr_solve_block_tridiag_general(
    diag: &[DenseMatrix],
    lower: &[DenseMatrix],
    upper: &[DenseMatrix],
    rhs: &[DenseMatrix],
) -> Result<Vec<DenseMatrix>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::InvalidArgument("block tridiagonal inputs have different lengths".into()));
    }
    let m = diag[0].rows();
    let k = rhs[0].cols();
    for b in diag.iter().chain(lower).chain(upper) {
        if b.shape() != (m, m) {
            return Err(Error::Shape {
                op: "block tridiagonal coefficient",
                expected: (m, m),
                found: b.shape(),
            });
        }
    }
    for b in rhs {
        if b.shape() != (m, k) {
            return Err(Error::Shape {
                op: "block tridiagonal rhs",
                expected: (m, k),
                found: b.shape(),
            });
        }
    }

    let padded = (n + 1).next_power_of_two() - 1;
    let zero = DenseMatrix::zeros(m, m);
    let rows: Vec<Row> = (0..padded)
        .map(|i| {
            if i < n {
                Row {
                    lower: if i == 0 { zero.clone() } else { lower[i].clone() },
                    diag: diag[i].clone(),
                    upper: if i + 1 == n { zero.clone() } else { upper[i].clone() },
                    rhs: rhs[i].clone(),
                }
            } else {
                Row {
                    lower: zero.clone(),
                    diag: DenseMatrix::identity(m),
                    upper: zero.clone(),
                    rhs: DenseMatrix::zeros(m, k),
                }
            }
        })
        .collect();
    let mut x = reduce(&rows, 0)?;
    x.truncate(n);
    Ok(x)
}

#[derive(Clone)]
struct Row {
    lower: DenseMatrix,
    diag: DenseMatrix,
    upper: DenseMatrix,
    rhs: DenseMatrix,
}

/// Eliminates the even-indexed rows, recurses on the odd ones, and
/// back-substitutes. `rows.len()` is `2^p − 1`.
fn reduce(rows: &[Row], level: usize) -> Result<Vec<DenseMatrix>> {
    let n = rows.len();
    let singular = |i: usize| Error::singular(format!("block tridiagonal CR level {level}, pivot block {i}"));
    if n == 1 {
        return Ok(vec![rows[0].diag.solve(&rows[0].rhs).map_err(|_| singular(0))?]);
    }
    // D_j⁻¹ [L_j | U_j | b_j] for every even j.
    let mut solved = Vec::with_capacity(n / 2 + 1);
    for j in (0..n).step_by(2) {
        let r = &rows[j];
        let m = r.diag.rows();
        let k = r.rhs.cols();
        let stacked = DenseMatrix::from_fn(m, 2 * m + k, |i, c| {
            if c < m {
                r.lower.get(i, c)
            } else if c < 2 * m {
                r.upper.get(i, c - m)
            } else {
                r.rhs.get(i, c - 2 * m)
            }
        });
        let s = r.diag.solve(&stacked).map_err(|_| singular(j))?;
        solved.push((s.submatrix(0, 0, m, m), s.submatrix(0, m, m, m), s.submatrix(0, 2 * m, m, k)));
    }
    let mut reduced: Vec<Row> = Vec::with_capacity(n / 2);
    for i in (1..n).step_by(2) {
        let r = &rows[i];
        let (pl, pu, pb) = &solved[(i - 1) / 2];
        let (nl, nu, nb) = &solved[(i + 1) / 2];
        let lower = -&(&r.lower * pl);
        let upper = -&(&r.upper * nu);
        let diag = &(&r.diag - &(&r.lower * pu)) - &(&r.upper * nl);
        let rhs = &(&r.rhs - &(&r.lower * pb)) - &(&r.upper * nb);
        reduced.push(Row { lower, diag, upper, rhs });
    }
    let odd = reduce(&reduced, level + 1)?;
    let mut x = Vec::with_capacity(n);
    for j in 0..n {
        if j % 2 == 1 {
            x.push(odd[j / 2].clone());
            continue;
        }
        let (l, u, b) = &solved[j / 2];
        let mut v = b.clone();
        if j > 0 {
            v = &v - &(l * &odd[(j - 1) / 2]);
        }
        if j + 1 < n {
            v = &v - &(u * &odd[(j + 1) / 2]);
        }
        x.push(v);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block_is_a_linear_solve() {
        let d = DenseMatrix::from_row_major(2, 2, &[2.0, 1.0, 0.0, 4.0]).unwrap();
        let b = DenseMatrix::from_row_major(2, 1, &[3.0, 8.0]).unwrap();
        let z = DenseMatrix::zeros(2, 2);
        let x = cr_solve_block_tridiag(&d, &z, &z, std::slice::from_ref(&b), 1).unwrap();
        assert!(x[0].max_abs_diff(&DenseMatrix::from_row_major(2, 1, &[0.5, 2.0]).unwrap()) < 1e-15);
    }

    #[test]
    fn block_identity_returns_rhs() {
        let id = DenseMatrix::identity(3);
        let z = DenseMatrix::zeros(3, 3);
        let rhs: Vec<_> = (0..5).map(|i| DenseMatrix::from_fn(3, 2, |r, c| (i * 10 + r * 2 + c) as f64)).collect();
        let x = cr_solve_block_tridiag(&id, &z, &z, &rhs, 5).unwrap();
        assert_eq!(x, rhs);
    }

    #[test]
    fn singular_pivot_is_reported() {
        let z = DenseMatrix::zeros(2, 2);
        let rhs = vec![DenseMatrix::zeros(2, 1); 3];
        let e = cr_solve_block_tridiag(&z, &z, &z, &rhs, 3).unwrap_err();
        assert!(e.to_string().contains("level 0"), "{e}");
    }
}
