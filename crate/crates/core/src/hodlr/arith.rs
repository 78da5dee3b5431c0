use faer::MatRef;

use super::{child_path, ArithmeticConfig, HMatrix, Kind};
use crate::error::{Error, Result};
use crate::linalg::{hcat, recompress, DenseMatrix, LowRankFactor};

fn mismatch(path: &str) -> Error {
    Error::PartitionMismatch { path: path.to_string() }
}

fn check_sizes(a: &HMatrix, b: &HMatrix, path: &str) -> Result<()> {
    if a.size() != b.size() || a.leaf_size() != b.leaf_size() {
        return Err(mismatch(path));
    }
    Ok(())
}

/// `alpha * a + beta * b` with off-diagonal blocks recompressed at `cfg.tol`.
fn lincomb(alpha: f64, a: &HMatrix, beta: f64, b: &HMatrix, cfg: &ArithmeticConfig, path: &str) -> Result<HMatrix> {
    check_sizes(a, b, path)?;
    match (a.kind(), b.kind()) {
        (Kind::Leaf(x), Kind::Leaf(y)) => {
            let d = DenseMatrix::wrap(x.as_faer() * faer::Scale(alpha) + y.as_faer() * faer::Scale(beta));
            Ok(HMatrix::leaf(d, a.leaf_size()))
        }
        (Kind::Node(x), Kind::Node(y)) => {
            let a11 = lincomb(alpha, &x.a11, beta, &y.a11, cfg, &child_path(path, "11"))?;
            let a22 = lincomb(alpha, &x.a22, beta, &y.a22, cfg, &child_path(path, "22"))?;
            let a21 = combine_factors(alpha, &x.a21, beta, &y.a21, cfg)?;
            let a12 = combine_factors(alpha, &x.a12, beta, &y.a12, cfg)?;
            Ok(HMatrix::node(a11, a22, a21, a12))
        }
        _ => Err(mismatch(path)),
    }
}

fn combine_factors(
    alpha: f64,
    f: &LowRankFactor,
    beta: f64,
    g: &LowRankFactor,
    cfg: &ArithmeticConfig,
) -> Result<LowRankFactor> {
    let fx = f.u_sigma() * faer::Scale(alpha);
    let gx = g.u_sigma() * faer::Scale(beta);
    let x = hcat(fx.as_ref(), gx.as_ref());
    let y = hcat(f.v(), g.v());
    recompress(x.as_ref(), y.as_ref(), cfg.tol, cfg.max_rank)
}

pub fn h_add(a: &HMatrix, b: &HMatrix, cfg: &ArithmeticConfig) -> Result<HMatrix> {
    lincomb(1.0, a, 1.0, b, cfg, "root")
}

pub fn h_sub(a: &HMatrix, b: &HMatrix, cfg: &ArithmeticConfig) -> Result<HMatrix> {
    lincomb(1.0, a, -1.0, b, cfg, "root")
}

/// `h + x yᵀ`: the update is split across the diagonal blocks and folded
/// into every off-diagonal factor it touches.
pub(crate) fn add_lowrank(h: &HMatrix, x: MatRef<'_, f64>, y: MatRef<'_, f64>, cfg: &ArithmeticConfig) -> Result<HMatrix> {
    if x.ncols() == 0 {
        return Ok(h.clone());
    }
    match h.kind() {
        Kind::Leaf(d) => Ok(HMatrix::leaf(DenseMatrix::wrap(d.as_faer() + x * y.transpose()), h.leaf_size())),
        Kind::Node(n) => {
            let n1 = n.a11.size();
            let (x1, x2) = x.split_at_row(n1);
            let (y1, y2) = y.split_at_row(n1);
            let a11 = add_lowrank(&n.a11, x1, y1, cfg)?;
            let a22 = add_lowrank(&n.a22, x2, y2, cfg)?;
            let a21 = extend_factor(&n.a21, x2, y1, cfg)?;
            let a12 = extend_factor(&n.a12, x1, y2, cfg)?;
            Ok(HMatrix::node(a11, a22, a21, a12))
        }
    }
}

/// `f + x yᵀ`, recompressed.
fn extend_factor(f: &LowRankFactor, x: MatRef<'_, f64>, y: MatRef<'_, f64>, cfg: &ArithmeticConfig) -> Result<LowRankFactor> {
    let xs = hcat(f.u_sigma().as_ref(), x);
    let ys = hcat(f.v(), y);
    recompress(xs.as_ref(), ys.as_ref(), cfg.tol, cfg.max_rank)
}

/// Hierarchical product `a * b` with rank-adaptive recompression of every
/// off-diagonal block it produces.
pub fn h_mul(a: &HMatrix, b: &HMatrix, cfg: &ArithmeticConfig) -> Result<HMatrix> {
    mul_rec(a, b, cfg, "root")
}

fn mul_rec(a: &HMatrix, b: &HMatrix, cfg: &ArithmeticConfig, path: &str) -> Result<HMatrix> {
    check_sizes(a, b, path)?;
    match (a.kind(), b.kind()) {
        (Kind::Leaf(x), Kind::Leaf(y)) => Ok(HMatrix::leaf(DenseMatrix::wrap(x.as_faer() * y.as_faer()), a.leaf_size())),
        (Kind::Node(x), Kind::Node(y)) => {
            // C11 = A11 B11 + A12 B21
            let mut c11 = mul_rec(&x.a11, &y.a11, cfg, &child_path(path, "11"))?;
            if x.a12.rank() > 0 && y.a21.rank() > 0 {
                let core = x.a12.v().transpose() * y.a21.u_sigma();
                let lhs = x.a12.u_sigma() * core;
                c11 = add_lowrank(&c11, lhs.as_ref(), y.a21.v(), cfg)?;
            }
            // C22 = A22 B22 + A21 B12
            let mut c22 = mul_rec(&x.a22, &y.a22, cfg, &child_path(path, "22"))?;
            if x.a21.rank() > 0 && y.a12.rank() > 0 {
                let core = x.a21.v().transpose() * y.a12.u_sigma();
                let lhs = x.a21.u_sigma() * core;
                c22 = add_lowrank(&c22, lhs.as_ref(), y.a12.v(), cfg)?;
            }
            // C12 = A11 B12 + A12 B22
            let l1 = x.a11.mul_dense(y.a12.u_sigma().as_ref());
            let r2 = y.a22.tmul_dense(x.a12.v());
            let c12 = recompress(
                hcat(l1.as_ref(), x.a12.u_sigma().as_ref()).as_ref(),
                hcat(y.a12.v(), r2.as_ref()).as_ref(),
                cfg.tol,
                cfg.max_rank,
            )?;
            // C21 = A21 B11 + A22 B21
            let r1 = y.a11.tmul_dense(x.a21.v());
            let l2 = x.a22.mul_dense(y.a21.u_sigma().as_ref());
            let c21 = recompress(
                hcat(x.a21.u_sigma().as_ref(), l2.as_ref()).as_ref(),
                hcat(r1.as_ref(), y.a21.v()).as_ref(),
                cfg.tol,
                cfg.max_rank,
            )?;
            Ok(HMatrix::node(c11, c22, c21, c12))
        }
        _ => Err(mismatch(path)),
    }
}

/// Hierarchical inverse by recursive 2×2 block elimination on the Schur
/// complement `S = A22 − A21 A11⁻¹ A12`.
///
/// A singular leaf, diagonal block or Schur complement is reported with the
/// tree path at which it occurred.
pub fn h_invert(a: &HMatrix, cfg: &ArithmeticConfig) -> Result<HMatrix> {
    invert_rec(a, cfg, "root")
}

fn invert_rec(a: &HMatrix, cfg: &ArithmeticConfig, path: &str) -> Result<HMatrix> {
    match a.kind() {
        Kind::Leaf(d) => {
            let inv = d
                .inverse()
                .map_err(|_| Error::singular(format!("h_invert leaf {path}")))?;
            Ok(HMatrix::leaf(inv, a.leaf_size()))
        }
        Kind::Node(n) => {
            let x11 = invert_rec(&n.a11, cfg, &child_path(path, "11"))?;
            let p = x11.mul_dense(n.a12.u_sigma().as_ref());
            let w21 = n.a21.u_sigma();
            let core = n.a21.v().transpose() * &p;
            let s = add_lowrank(&n.a22, (&w21 * core * faer::Scale(-1.0)).as_ref(), n.a12.v(), cfg)?;
            // `S` in a path marks the Schur complement of that node.
            let xs = invert_rec(&s, cfg, &child_path(path, "S"))?;
            let w = xs.mul_dense(w21.as_ref());
            let z = x11.tmul_dense(n.a21.v());
            let c11 = add_lowrank(&x11, (&p * (n.a12.v().transpose() * &w)).as_ref(), z.as_ref(), cfg)?;
            let q = xs.tmul_dense(n.a12.v());
            let c12 = recompress((&p * faer::Scale(-1.0)).as_ref(), q.as_ref(), cfg.tol, cfg.max_rank)?;
            let c21 = recompress((&w * faer::Scale(-1.0)).as_ref(), z.as_ref(), cfg.tol, cfg.max_rank)?;
            check_finite(&c11, path)?;
            Ok(HMatrix::node(c11, xs, c21, c12))
        }
    }
}

fn check_finite(h: &HMatrix, path: &str) -> Result<()> {
    let ok = match h.kind() {
        Kind::Leaf(d) => d.as_faer().is_all_finite(),
        Kind::Node(n) => {
            check_finite(&n.a11, path)?;
            check_finite(&n.a22, path)?;
            n.a21.u().is_all_finite() && n.a12.u().is_all_finite()
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::singular(format!("h_invert {path}: non-finite result")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodlr::build_from_dense;

    fn cfg(leaf: usize, tol: f64) -> ArithmeticConfig {
        ArithmeticConfig {
            tol,
            leaf_size: leaf,
            max_rank: None,
        }
    }

    fn sample(n: usize, seed: u64) -> DenseMatrix {
        // Tridiagonal plus a rank-one term: quasiseparable of rank 2.
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let u: Vec<f64> = (0..n).map(|_| next()).collect();
        let v: Vec<f64> = (0..n).map(|_| next()).collect();
        DenseMatrix::from_fn(n, n, |i, j| {
            let band = if i == j { 4.0 } else if i.abs_diff(j) == 1 { 0.7 } else { 0.0 };
            band + 0.3 * u[i] * v[j]
        })
    }

    #[test]
    fn add_and_sub_match_dense() {
        let c = cfg(8, 1e-14);
        let (a, b) = (sample(50, 1), sample(50, 2));
        let (ha, hb) = (build_from_dense(&a, &c).unwrap(), build_from_dense(&b, &c).unwrap());
        let s = h_add(&ha, &hb, &c).unwrap().to_dense();
        let d = h_sub(&ha, &hb, &c).unwrap().to_dense();
        assert!(s.max_abs_diff(&(&a + &b)) < 1e-12);
        assert!(d.max_abs_diff(&(&a - &b)) < 1e-12);
    }

    #[test]
    fn mul_matches_dense() {
        let c = cfg(8, 1e-14);
        let (a, b) = (sample(70, 3), sample(70, 4));
        let ha = build_from_dense(&a, &c).unwrap();
        let hb = build_from_dense(&b, &c).unwrap();
        let p = h_mul(&ha, &hb, &c).unwrap().to_dense();
        let exact = &a * &b;
        assert!(p.max_abs_diff(&exact) < 1e-12 * exact.norm_max());
    }

    #[test]
    fn mul_by_identity() {
        let c = cfg(4, 1e-15);
        let a = sample(33, 5);
        let ha = build_from_dense(&a, &c).unwrap();
        let id = HMatrix::scaled_identity(33, 1.0, &c);
        assert!(h_mul(&ha, &id, &c).unwrap().to_dense().max_abs_diff(&a) < 1e-14);
        assert!(h_mul(&id, &ha, &c).unwrap().to_dense().max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn invert_diagonal() {
        let c = cfg(4, 1e-14);
        let d = DenseMatrix::from_fn(20, 20, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let inv = h_invert(&build_from_dense(&d, &c).unwrap(), &c).unwrap().to_dense();
        for i in 0..20 {
            for j in 0..20 {
                let e = if i == j { 1.0 / (i + 1) as f64 } else { 0.0 };
                assert!((inv.get(i, j) - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn invert_matches_dense() {
        let c = cfg(8, 1e-14);
        let a = sample(90, 6);
        let inv = h_invert(&build_from_dense(&a, &c).unwrap(), &c).unwrap().to_dense();
        let exact = a.inverse().unwrap();
        assert!(inv.max_abs_diff(&exact) < 1e-12 * exact.norm_max());
    }

    #[test]
    fn singular_schur_complement_names_path() {
        let c = cfg(2, 0.0);
        let mut a = DenseMatrix::identity(4);
        a.set(0, 2, 1.0);
        a.set(2, 0, 1.0);
        a.set(1, 3, 1.0);
        a.set(3, 1, 1.0);
        let err = h_invert(&build_from_dense(&a, &c).unwrap(), &c).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("root.S"), "{msg}");
    }

    #[test]
    fn mismatched_trees_are_rejected() {
        let c = cfg(4, 0.0);
        let a = HMatrix::scaled_identity(10, 1.0, &c);
        let b = HMatrix::scaled_identity(12, 1.0, &c);
        assert!(matches!(h_add(&a, &b, &c), Err(Error::PartitionMismatch { .. })));
        assert!(matches!(h_mul(&a, &b, &c), Err(Error::PartitionMismatch { .. })));
    }
}
