use faer::c64;

use super::LaurentBlocks;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DenseMatrix};

/// `φ(z) = −z⁻¹A₋₁ + (I − A₀) − zA₁`.
pub fn evaluate_phi<S: LaurentBlocks + ?Sized>(s: &S, z: c64) -> Result<ComplexMatrix> {
    if z.norm() == 0.0 {
        return Err(Error::InvalidArgument("phi is undefined at z = 0".into()));
    }
    let [am1, a0, a1] = s.blocks();
    let m = a0.rows();
    let id = DenseMatrix::identity(m);
    let one = c64::new(1.0, 0.0);
    Ok(ComplexMatrix::linear_combination(&[
        (-z.inv(), &am1),
        (one, &id),
        (-one, &a0),
        (-z, &a1),
    ]))
}

/// `ψ(z) = φ(z)⁻¹`.
///
/// Pivots at the rounding level of the terms of `φ(z)` count as singular.
pub fn evaluate_psi<S: LaurentBlocks + ?Sized>(s: &S, z: c64) -> Result<ComplexMatrix> {
    let scale = {
        let [am1, a0, a1] = s.blocks();
        am1.norm_inf() / z.norm() + 1.0 + a0.norm_inf() + z.norm() * a1.norm_inf()
    };
    evaluate_phi(s, z)?
        .inverse_relative_to(scale)
        .map_err(|_| Error::singular(format!("phi({}{:+}i)", z.re, z.im)))
}

/// Values of a matrix Laurent polynomial `A(z) = z⁻¹A₋₁ + A₀ + zA₁` at the
/// five interpolation nodes `i, −i, −1, ξ, ξ⁵` with `ξ = e^{iπ/3}`.
#[derive(Clone, Debug)]
pub struct LaurentSamples {
    pub at_i: ComplexMatrix,
    pub at_minus_i: ComplexMatrix,
    pub at_minus_one: ComplexMatrix,
    pub at_xi: ComplexMatrix,
    pub at_xi5: ComplexMatrix,
}

impl LaurentSamples {
    pub fn xi() -> c64 {
        c64::new(0.5, 3f64.sqrt() / 2.0)
    }

    /// Samples `f` at the five nodes.
    pub fn sample(mut f: impl FnMut(c64) -> ComplexMatrix) -> Self {
        let xi = Self::xi();
        LaurentSamples {
            at_i: f(c64::new(0.0, 1.0)),
            at_minus_i: f(c64::new(0.0, -1.0)),
            at_minus_one: f(c64::new(-1.0, 0.0)),
            at_xi: f(xi),
            at_xi5: f(xi.conj()),
        }
    }
}

/// Recovers `(A₋₁, A₀, A₁)` from samples of `A(z)`.
pub fn coefficients_from_samples(s: &LaurentSamples) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let xi = LaurentSamples::xi();
    let xi5 = xi.conj();
    let third = c64::new(1.0 / 3.0, 0.0);
    let half = c64::new(0.5, 0.0);
    let am1 = s.at_xi.scale(xi).add(&s.at_xi5.scale(xi5)).sub(&s.at_minus_one).scale(third);
    let a0 = s.at_i.add(&s.at_minus_i).scale(half);
    let a1 = s.at_xi.scale(xi5).add(&s.at_xi5.scale(xi)).sub(&s.at_minus_one).scale(third);
    (am1, a0, a1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qbd::QbdProblem;

    #[test]
    fn scalar_phi_vanishes_at_one() {
        let p = QbdProblem::scalar(0.3, 0.4, 0.3).unwrap();
        let v = evaluate_phi(&p, c64::new(1.0, 0.0)).unwrap().get(0, 0);
        assert!(v.norm() < 1e-16);
        assert!(evaluate_psi(&p, c64::new(1.0, 0.0)).is_err());
        assert!(evaluate_phi(&p, c64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn decoupled_phi_is_identity() {
        let z = DenseMatrix::zeros(3, 3);
        let t = (z.clone(), z.clone(), z);
        let phi = evaluate_phi(&t, c64::new(0.3, -0.8)).unwrap();
        assert_eq!(phi, ComplexMatrix::identity(3));
        assert_eq!(evaluate_psi(&t, c64::new(2.0, 1.0)).unwrap(), ComplexMatrix::identity(3));
    }

    #[test]
    fn identity_sample_recovery() {
        let s = LaurentSamples::sample(|_| ComplexMatrix::identity(2));
        let (am1, a0, a1) = coefficients_from_samples(&s);
        assert!(am1.norm_max() < 1e-15);
        assert!(a0.sub(&ComplexMatrix::identity(2)).norm_max() < 1e-15);
        assert!(a1.norm_max() < 1e-15);
    }
}
