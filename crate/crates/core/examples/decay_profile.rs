//! Off-diagonal singular values of A0 across CR steps, compared with the
//! decay bound of the instance.
//!
//! cargo run --release --example decay_profile -- [m] [steps] [stochastic|absorbed]

use qbdcr::analysis::{check_profile_against_bounds, decay_bound, decay_profile_with, estimate_delta, ProbedBlock};
use qbdcr::cr::DenseBackend;
use qbdcr::linalg::OffDiagonalSplit;
use qbdcr::qbd::{random_qbd_with, spectral_annulus, Normalization};

fn main() -> qbdcr::Result<()> {
    qbdcr::set_threads(1);
    let args: Vec<String> = std::env::args().skip(1).collect();
    let m: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(400);
    let steps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let normalization = match args.get(2).map(String::as_str) {
        Some("stochastic") => Normalization::Stochastic,
        _ => Normalization::IdentityAbsorbed,
    };

    let p = random_qbd_with(m, 1, 1, normalization)?;
    let si = spectral_annulus(&p)?;
    println!("m = {m}, class {:?}, t = {:.6}, theta = {:.6}", si.class, si.t, si.theta);

    let split = OffDiagonalSplit::largest_south_west(m);
    let profile = decay_profile_with(&p, steps, split, &DenseBackend, ProbedBlock::A0, Some(si.theta))?;
    let delta = estimate_delta(&si, &p)?;
    println!(
        "delta = {:.4e} at {:.3}{:+.3}i, |phi_theta(1)^-1| = {:.4e}, L = {:.4}",
        delta.delta,
        delta.argmax_re,
        delta.argmax_im,
        delta.phi_one_inv_norm,
        profile.l_max()
    );

    let bounds = (0..=steps)
        .map(|h| decay_bound(&si, &p, h, &delta, profile.l_max()))
        .collect::<qbdcr::Result<Vec<_>>>()?;
    let ranks = profile.threshold_ranks(f64::EPSILON);
    for (h, sigma) in profile.sigma.iter().enumerate() {
        println!(
            "h = {h:2}  rank above eps = {:3}  sigma_1 = {:.3e}  sigma_10 = {:.3e}  bound_1 = {:.3e}",
            ranks[h],
            sigma.first().copied().unwrap_or(0.0),
            sigma.get(9).copied().unwrap_or(0.0),
            bounds[h].applicable(1)
        );
    }
    let check = check_profile_against_bounds(&profile, &bounds);
    println!(
        "{} of {} singular values exceed the bound; max ratio {:.3e} at h = {}, s = {}",
        check.violations, check.checked, check.max_ratio, check.worst_h, check.worst_s
    );
    Ok(())
}
