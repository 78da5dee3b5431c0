//! Truncated SVD and recompressed sums of low-rank factors.

use qbdcr::linalg::{lowrank_add, truncated_svd, DenseMatrix};

fn main() -> qbdcr::Result<()> {
    // Singular values 2^-j, j = 0..40, with random-looking orthogonal sides.
    let (m, n, k) = (60, 50, 41);
    let u = cosine_basis(m, k);
    let v = cosine_basis(n, k);
    let a = DenseMatrix::from_fn(m, n, |i, j| (0..k).map(|l| u.get(i, l) * 0.5f64.powi(l as i32) * v.get(j, l)).sum());

    for tol in [1e-4, 1e-8, 1e-12] {
        let f = truncated_svd(&a, tol, None)?;
        let err = f.to_dense().max_abs_diff(&a);
        println!("tol {tol:.0e}: rank {:2}, max error {err:.2e}", f.rank());
    }

    let f = truncated_svd(&a, 1e-12, Some(5))?;
    let g = truncated_svd(&a.scale(-0.5), 1e-12, Some(5))?;
    let s = lowrank_add(&f, &g, 1e-12)?;
    println!("rank-5 factor plus -1/2 of itself: rank {} (sigma_1 = {:.3})", s.rank(), s.sigma()[0]);
    Ok(())
}

/// Orthonormal columns of the DCT-II basis.
fn cosine_basis(n: usize, k: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, k, |i, j| {
        let w = if j == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        w * (std::f64::consts::PI * (i as f64 + 0.5) * j as f64 / n as f64).cos()
    })
}
