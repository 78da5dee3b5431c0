//! Roots of det(A₋₁ + z(A₀ − I) + z²A₁), the annulus of analyticity and the
//! recurrence class of a few instances.

use qbdcr::qbd::{random_qbd_with, spectral_annulus, Normalization, QbdProblem};

fn main() -> qbdcr::Result<()> {
    let cases: Vec<(String, QbdProblem)> = vec![
        ("scalar, drift toward 0".into(), QbdProblem::scalar(0.5, 0.2, 0.3)?),
        ("scalar, null recurrent".into(), QbdProblem::scalar(0.4, 0.2, 0.4)?),
        ("scalar, transient".into(), QbdProblem::scalar(0.2, 0.3, 0.5)?),
        ("m = 50, seed 1".into(), random_qbd_with(50, 1, 1, Normalization::Stochastic)?),
        ("m = 50, seed 2".into(), random_qbd_with(50, 1, 2, Normalization::Stochastic)?),
        ("m = 50, absorbed".into(), random_qbd_with(50, 1, 1, Normalization::IdentityAbsorbed)?),
    ];
    for (name, p) in cases {
        let si = spectral_annulus(&p)?;
        println!(
            "{name:24} {:?}: lambda_m = {:.6}, lambda_m+1 = {:.6}, t = {:.6}, theta = {:.6}",
            si.class, si.lambda_m, si.lambda_m1, si.t, si.theta
        );
    }
    Ok(())
}
