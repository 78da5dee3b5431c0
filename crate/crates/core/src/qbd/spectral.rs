use faer::Mat;
use serde::{Deserialize, Serialize};

use super::QbdProblem;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// `|λ − 1|` below which a central root modulus counts as 1 for the
/// null-recurrence test.
pub const NULL_RECURRENCE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecurrenceClass {
    /// `λ_m = 1 < λ_{m+1}`.
    PositiveRecurrent,
    /// `λ_m = λ_{m+1} = 1`.
    NullRecurrent,
    /// `λ_m < 1 = λ_{m+1}`.
    Transient,
    /// Neither central modulus is 1: the blocks sum to a strictly
    /// substochastic matrix.
    Substochastic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    /// `+∞` for roots at infinity, which serialize with null parts.
    pub modulus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralInfo {
    pub schema_version: u32,
    /// The `2m` roots of `det(A₋₁ + z(A₀ − I) + z²A₁)`, nondecreasing in
    /// modulus, infinite roots last.
    pub roots: Vec<Root>,
    pub lambda_m: f64,
    pub lambda_m1: f64,
    /// `sqrt(λ_{m+1} / λ_m)`, set to exactly 1 for null-recurrent problems.
    pub t: f64,
    /// `sqrt(λ_m λ_{m+1})`.
    pub theta: f64,
    pub class: RecurrenceClass,
    /// Real point `σ` used by the shifted linearization.
    pub shift: f64,
}

const SHIFTS: [f64; 6] = [-1.0, -0.75, -1.5, -0.6, -2.0, -0.45];

/// Roots of the quadratic pencil and the resulting annulus.
///
/// With `Q = P(σ)` for a real `σ` where `P(z) = A₋₁ + zB + z²A₁`,
/// `B = A₀ − I`, the substitution `z = σ + 1/w` turns `P` into
/// `w²Q + w(B + 2σA₁) + A₁`, whose companion matrix has a standard
/// eigenproblem. Zero eigenvalues `w` are roots at infinity.
pub fn spectral_annulus(p: &QbdProblem) -> Result<SpectralInfo> {
    p.validate()?;
    let m = p.size();
    let b = p.a0().shift_diagonal(-1.0);
    let a1 = p.a1();
    let pencil = |s: f64| &(&*p.am1() + &b.scale(s)) + &a1.scale(s * s);

    let mut best: Option<(f64, f64)> = None;
    for &s in &SHIFTS {
        let ratio = pivot_ratio(&pencil(s));
        if best.is_none_or(|(_, r)| ratio > r) {
            best = Some((s, ratio));
        }
        if ratio > 1e-8 {
            break;
        }
    }
    let (shift, ratio) = best.expect("shift list is nonempty");
    if !(ratio > 0.0) {
        return Err(Error::EigenFailed { dim: 2 * m });
    }
    let q = pencil(shift);
    let c1 = &b + &a1.scale(2.0 * shift);
    let rhs = DenseMatrix::from_fn(m, 2 * m, |i, j| if j < m { c1.get(i, j) } else { a1.get(i, j - m) });
    let x = q.solve(&rhs)?;
    let comp = Mat::<f64>::from_fn(2 * m, 2 * m, |i, j| {
        if i < m {
            -x.get(i, j)
        } else if j == i - m {
            1.0
        } else {
            0.0
        }
    });
    let scale = DenseMatrix::wrap(comp.clone()).norm_inf().max(1.0);
    let w = comp.eigenvalues().map_err(|_| Error::EigenFailed { dim: 2 * m })?;

    let mut roots: Vec<Root> = w
        .iter()
        .map(|w| {
            if w.norm() <= 1e-13 * scale {
                Root {
                    re: f64::INFINITY,
                    im: f64::INFINITY,
                    modulus: f64::INFINITY,
                }
            } else {
                let z = w.inv();
                let (re, im) = (z.re + shift, z.im);
                Root {
                    re,
                    im,
                    modulus: re.hypot(im),
                }
            }
        })
        .collect();
    roots.sort_by(|a, b| a.modulus.total_cmp(&b.modulus));

    let lambda_m = roots[m - 1].modulus;
    let lambda_m1 = roots[m].modulus;
    let (dm, dm1) = ((lambda_m - 1.0).abs(), (lambda_m1 - 1.0).abs());
    let class = if dm < NULL_RECURRENCE_TOL && dm1 < NULL_RECURRENCE_TOL {
        RecurrenceClass::NullRecurrent
    } else if dm.min(dm1) >= NULL_RECURRENCE_TOL {
        RecurrenceClass::Substochastic
    } else if dm <= dm1 {
        RecurrenceClass::PositiveRecurrent
    } else {
        RecurrenceClass::Transient
    };
    let t = if class == RecurrenceClass::NullRecurrent {
        1.0
    } else {
        (lambda_m1 / lambda_m).sqrt().max(1.0)
    };
    Ok(SpectralInfo {
        schema_version: 1,
        roots,
        lambda_m,
        lambda_m1,
        t,
        theta: (lambda_m * lambda_m1).sqrt(),
        class,
        shift,
    })
}

/// Smallest over largest LU pivot magnitude; 0 for an exactly singular
/// factorization.
fn pivot_ratio(a: &DenseMatrix) -> f64 {
    let lu = a.as_faer().partial_piv_lu();
    let u = lu.U();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..u.nrows() {
        lo = lo.min(u[(i, i)].abs());
        hi = hi.max(u[(i, i)].abs());
    }
    if hi > 0.0 && lo.is_finite() {
        lo / hi
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qbd::Normalization;

    #[test]
    fn scalar_null_recurrent() {
        let s = spectral_annulus(&QbdProblem::scalar(0.3, 0.4, 0.3).unwrap()).unwrap();
        assert_eq!(s.class, RecurrenceClass::NullRecurrent);
        assert_eq!(s.t, 1.0);
        assert!((s.roots[0].modulus - 1.0).abs() < 1e-7);
    }

    #[test]
    fn scalar_transient() {
        let s = spectral_annulus(&QbdProblem::scalar(0.2, 0.4, 0.4).unwrap()).unwrap();
        assert!((s.lambda_m - 0.5).abs() < 1e-14);
        assert!((s.lambda_m1 - 1.0).abs() < 1e-14);
        assert!((s.t - 2f64.sqrt()).abs() < 1e-13);
        assert_eq!(s.class, RecurrenceClass::Transient);
    }

    #[test]
    fn scalar_positive_recurrent() {
        let s = spectral_annulus(&QbdProblem::scalar(0.4, 0.4, 0.2).unwrap()).unwrap();
        assert!((s.lambda_m - 1.0).abs() < 1e-14);
        assert!((s.lambda_m1 - 2.0).abs() < 1e-13);
        assert_eq!(s.class, RecurrenceClass::PositiveRecurrent);
    }

    #[test]
    fn vanishing_a1_gives_infinite_roots_last() {
        let am1 = DenseMatrix::from_row_major(2, 2, &[0.3, 0.1, 0.2, 0.2]).unwrap();
        let a0 = DenseMatrix::from_row_major(2, 2, &[0.4, 0.2, 0.1, 0.5]).unwrap();
        let p = QbdProblem::new(am1, a0, DenseMatrix::zeros(2, 2), None, Normalization::Stochastic).unwrap();
        let s = spectral_annulus(&p).unwrap();
        assert!(s.roots[..2].iter().all(|r| r.modulus.is_finite()));
        assert!(s.roots[2..].iter().all(|r| r.modulus.is_infinite()));
        assert!(s.t.is_infinite());
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("null"));
    }
}
