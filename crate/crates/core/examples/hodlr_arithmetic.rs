//! Hierarchical matrices: construction from a banded matrix, products,
//! inversion, and how the off-diagonal ranks react to the threshold.
//!
//! cargo run --release --example hodlr_arithmetic -- [n]

use qbdcr::hodlr::{build_from_dense, h_add, h_invert, h_mul, h_offdiag_singular_values, ArithmeticConfig};
use qbdcr::linalg::DenseMatrix;

fn main() -> qbdcr::Result<()> {
    qbdcr::set_threads(1);
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1024);

    // The inverse of a tridiagonal matrix is semiseparable: every
    // off-diagonal block has rank one.
    let t = DenseMatrix::banded_toeplitz(n, 1, &[-1.0, 4.0, -1.0]);
    for tol in [1e-16, 1e-12, 1e-8] {
        let cfg = ArithmeticConfig::with_tol(tol);
        let a = build_from_dense(&t, &cfg)?;
        let inv = h_invert(&a, &cfg)?;
        let prod = h_mul(&a, &inv, &cfg)?;
        let err = prod.to_dense().max_abs_diff(&DenseMatrix::identity(n));
        let s = inv.stats();
        println!(
            "tol {tol:.0e}: inverse max rank {:2}, {:.1}% of dense storage, |A A^-1 - I|max = {err:.2e}",
            s.max_rank,
            100.0 * s.stored_scalars as f64 / s.dense_scalars as f64
        );
    }

    let cfg = ArithmeticConfig::with_tol(1e-14);
    let a = build_from_dense(&t, &cfg)?;
    let sum = h_add(&a, &a, &cfg)?;
    println!("rank of A + A at the root: {}", sum.max_offdiag_rank());
    let inv = h_invert(&a, &cfg)?;
    for block in h_offdiag_singular_values(&inv, 0)? {
        let head: Vec<String> = block.sigma.iter().take(6).map(|x| format!("{x:.1e}")).collect();
        println!("{} ({}x{}): sigma = [{}, ...]", block.path, block.rows, block.cols, head.join(", "));
    }
    Ok(())
}
