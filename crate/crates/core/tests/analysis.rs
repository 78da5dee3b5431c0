mod common;

use common::{null_recurrent_instance, positive_recurrent_seeds};
use qbdcr::analysis::{
    check_profile_against_bounds, decay_bound, decay_profile, decay_profile_with, estimate_delta, log_slope,
    ProbedBlock,
};
use qbdcr::cr::{DenseBackend, HodlrBackend};
use qbdcr::hodlr::ArithmeticConfig;
use qbdcr::linalg::OffDiagonalSplit;
use qbdcr::qbd::{random_qbd, random_qbd_with, spectral_annulus, Normalization};

#[test]
fn profiles_are_sorted_and_nonnegative() {
    let p = random_qbd(60, 2, 5).unwrap();
    for block in [ProbedBlock::Am1, ProbedBlock::A0, ProbedBlock::A1] {
        let prof =
            decay_profile_with(&p, 6, OffDiagonalSplit::largest_south_west(60), &DenseBackend, block, None).unwrap();
        for s in &prof.sigma {
            assert!(s.iter().all(|&x| x >= 0.0));
            assert!(s.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}

#[test]
fn late_profiles_decay_at_least_at_the_bound_rate() {
    for (norm, m) in [(Normalization::Stochastic, 200), (Normalization::IdentityAbsorbed, 200)] {
        let p = random_qbd_with(m, 1, 1, norm).unwrap();
        let si = spectral_annulus(&p).unwrap();
        assert!(si.t > 1.0);
        let prof = decay_profile(&p, 14, OffDiagonalSplit::largest_south_west(m), &DenseBackend).unwrap();
        let target = -0.5 * si.t.ln() * 0.8;
        for h in 10..=14 {
            if let Some(slope) = log_slope(&prof.sigma[h], 1e-14) {
                assert!(slope <= target, "{norm:?} h = {h}: slope {slope} above {target}");
            }
        }
    }
}

#[test]
fn null_recurrent_profiles_stay_low_rank() {
    let m = 80;
    let p = null_recurrent_instance(m, 3);
    let prof = decay_profile(&p, 10, OffDiagonalSplit::largest_south_west(m), &DenseBackend).unwrap();
    let ranks = prof.threshold_ranks(1e-14);
    for (h, &r) in ranks.iter().enumerate() {
        assert!(r <= m / 4, "h = {h}: rank {r}");
    }
}

#[test]
fn dense_and_hodlr_profiles_agree() {
    let m = 100;
    let p = random_qbd(m, 1, 2).unwrap();
    let split = OffDiagonalSplit::largest_south_west(m);
    let d = decay_profile(&p, 10, split, &DenseBackend).unwrap();
    let cfg = ArithmeticConfig {
        tol: 1e-14,
        leaf_size: 16,
        max_rank: None,
    };
    let h = decay_profile(&p, 10, split, &HodlrBackend::new(cfg)).unwrap();
    for (sd, sh) in d.sigma.iter().zip(&h.sigma) {
        let scale = sd.first().copied().unwrap_or(0.0).max(1.0);
        for (a, b) in sd.iter().zip(sh) {
            assert!((a - b).abs() <= 1e-10 * scale, "{a:e} vs {b:e}");
        }
    }
}

#[test]
fn stochastic_profile_respects_its_bound() {
    let m = 400;
    let seed = positive_recurrent_seeds(m, 1, 1, 1.001)[0];
    let p = random_qbd(m, 1, seed).unwrap();
    let si = spectral_annulus(&p).unwrap();
    let prof = decay_profile(&p, 20, OffDiagonalSplit::largest_south_west(m), &DenseBackend).unwrap();
    let delta = estimate_delta(&si, &p).unwrap();
    let bounds: Vec<_> = (0..=20).map(|h| decay_bound(&si, &p, h, &delta, prof.l_max()).unwrap()).collect();
    let check = check_profile_against_bounds(&prof, &bounds);
    assert_eq!(check.checked, 21 * (m / 2));
    assert_eq!(check.violations, 0, "worst ratio {} at h = {}, s = {}", check.max_ratio, check.worst_h, check.worst_s);
}
