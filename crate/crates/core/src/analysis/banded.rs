use faer::c64;

use crate::error::{Error, Result};
use crate::qbd::LaurentBlocks;

/// LU factorization with partial pivoting of a complex band matrix with
/// half-bandwidth `p`. Row `i` stores columns `i − p ..= i + 2p`, enough to
/// hold the fill-in of the pivoted factor.
pub(crate) struct BandLu {
    n: usize,
    p: usize,
    width: usize,
    ab: Vec<c64>,
    mult: Vec<c64>,
    piv: Vec<usize>,
}

impl BandLu {
    /// Factors `φ(z)` of a Laurent triple whose blocks have half-bandwidth
    /// at most `p`.
    pub(crate) fn phi<S: LaurentBlocks + ?Sized>(s: &S, p: usize, z: c64) -> Result<BandLu> {
        let [am1, a0, a1] = s.blocks();
        let n = a0.rows();
        let zinv = z.inv();
        BandLu::factor(n, p, |i, j| {
            let diag = if i == j { 1.0 } else { 0.0 };
            -zinv * am1.get(i, j) + c64::new(diag - a0.get(i, j), 0.0) - z * a1.get(i, j)
        })
    }

    pub(crate) fn factor(n: usize, p: usize, entry: impl Fn(usize, usize) -> c64) -> Result<BandLu> {
        let p = p.min(n.saturating_sub(1));
        let width = 3 * p + 1;
        let mut ab = vec![c64::new(0.0, 0.0); n * width];
        for i in 0..n {
            for j in i.saturating_sub(p)..=(i + p).min(n - 1) {
                ab[i * width + j + p - i] = entry(i, j);
            }
        }
        let mut lu = BandLu {
            n,
            p,
            width,
            ab,
            mult: vec![c64::new(0.0, 0.0); n * p],
            piv: vec![0; n],
        };
        lu.eliminate()?;
        Ok(lu)
    }

    fn at(&self, i: usize, j: usize) -> c64 {
        self.ab[i * self.width + j + self.p - i]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut c64 {
        &mut self.ab[i * self.width + j + self.p - i]
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, p) = (self.n, self.p);
        let mut max_pivot: f64 = 0.0;
        for k in 0..n {
            let last_row = (k + p).min(n - 1);
            let last_col = (k + 2 * p).min(n - 1);
            let mut r = k;
            for i in k + 1..=last_row {
                if self.at(i, k).norm() > self.at(r, k).norm() {
                    r = i;
                }
            }
            self.piv[k] = r;
            if r != k {
                for j in k..=last_col {
                    let a = self.at(k, j);
                    let b = self.at(r, j);
                    *self.at_mut(k, j) = b;
                    *self.at_mut(r, j) = a;
                }
            }
            let pivot = self.at(k, k);
            max_pivot = max_pivot.max(pivot.norm());
            if !(pivot.norm() > max_pivot * f64::EPSILON * n as f64) {
                return Err(Error::singular(format!("banded LU pivot {k}")));
            }
            for i in k + 1..=last_row {
                let l = self.at(i, k) / pivot;
                self.mult[k * p + (i - k - 1)] = l;
                *self.at_mut(i, k) = c64::new(0.0, 0.0);
                if l.norm() == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let u = self.at(k, j);
                    *self.at_mut(i, j) -= l * u;
                }
            }
        }
        Ok(())
    }

    /// Solves `A x = b` in place.
    pub(crate) fn solve(&self, b: &mut [c64]) {
        let (n, p) = (self.n, self.p);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for i in k + 1..=(k + p).min(n - 1) {
                b[i] -= self.mult[k * p + (i - k - 1)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + 2 * p).min(n - 1) {
                acc -= self.at(i, j) * b[j];
            }
            b[i] = acc / self.at(i, i);
        }
    }

    /// Solves `Aᴴ x = b` in place.
    pub(crate) fn solve_adjoint(&self, b: &mut [c64]) {
        let (n, p) = (self.n, self.p);
        for i in 0..n {
            let mut acc = b[i];
            for j in i.saturating_sub(2 * p)..i {
                acc -= self.at(j, i).conj() * b[j];
            }
            b[i] = acc / self.at(i, i).conj();
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for i in k + 1..=(k + p).min(n - 1) {
                acc -= self.mult[k * p + (i - k - 1)].conj() * b[i];
            }
            b[k] = acc;
            b.swap(k, self.piv[k]);
        }
    }

    /// Estimate of `‖A⁻¹‖₂` by power iteration on `A⁻¹A⁻ᴴ`. Every iterate is
    /// a lower bound; iteration stops at relative change `1e-10` or after
    /// `max_iter` sweeps.
    pub(crate) fn inverse_norm2(&self, max_iter: usize) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let mut x: Vec<c64> = (0..n)
            .map(|i| {
                let s = (i as f64 * 0.618_033_988_75).fract();
                c64::new(1.0 + s, 0.5 - s)
            })
            .collect();
        normalize(&mut x);
        let mut est = 0.0;
        for _ in 0..max_iter {
            self.solve_adjoint(&mut x);
            let nv = norm(&x);
            self.solve(&mut x);
            normalize(&mut x);
            if (nv - est).abs() <= 1e-10 * nv {
                return nv;
            }
            est = nv;
        }
        est
    }
}

fn norm(x: &[c64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(x: &mut [c64]) {
    let s = norm(x);
    if s > 0.0 {
        for v in x.iter_mut() {
            *v /= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(p: usize) -> impl Fn(usize, usize) -> c64 {
        move |i, j| {
            if i.abs_diff(j) > p {
                return c64::new(0.0, 0.0);
            }
            let a = ((i * 7 + j * 13) % 11) as f64 / 11.0 - 0.5;
            let b = ((i * 3 + j * 5) % 7) as f64 / 7.0 - 0.5;
            // Weak diagonal forces pivoting.
            let d = if i == j { 0.05 * (i % 3) as f64 } else { 0.0 };
            c64::new(a + d, b)
        }
    }

    #[test]
    fn solves_match_dense() {
        let (n, p) = (17, 2);
        let f = test_matrix(p);
        let lu = BandLu::factor(n, p, &f).unwrap();
        let dense = faer::Mat::<c64>::from_fn(n, n, &f);
        let b: Vec<c64> = (0..n).map(|i| c64::new(i as f64, 1.0)).collect();

        let mut x = b.clone();
        lu.solve(&mut x);
        for i in 0..n {
            let r: c64 = (0..n).map(|j| dense[(i, j)] * x[j]).sum::<c64>() - b[i];
            assert!(r.norm() < 1e-11, "row {i}: {r}");
        }

        let mut y = b.clone();
        lu.solve_adjoint(&mut y);
        for i in 0..n {
            let r: c64 = (0..n).map(|j| dense[(j, i)].conj() * y[j]).sum::<c64>() - b[i];
            assert!(r.norm() < 1e-11, "row {i}: {r}");
        }
    }

    #[test]
    fn inverse_norm_matches_svd() {
        let (n, p) = (12, 1);
        let f = test_matrix(p);
        let lu = BandLu::factor(n, p, &f).unwrap();
        let dense = faer::Mat::<c64>::from_fn(n, n, &f);
        let s = dense.singular_values().unwrap();
        let exact = 1.0 / s[n - 1];
        let est = lu.inverse_norm2(5000);
        assert!((est - exact).abs() <= 1e-6 * exact, "{est} vs {exact}");
    }

    #[test]
    fn singular_band_is_reported() {
        assert!(BandLu::factor(4, 1, |_, _| c64::new(0.0, 0.0)).is_err());
    }
}
