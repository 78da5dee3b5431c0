mod common;

use common::{assemble_block_tridiag, fixed_point_g, log_log_slope, null_recurrent_instance, perron_upper_bound, positive_recurrent_seeds};
use qbdcr::cr::{
    cr_solve_block_tridiag, cr_solve_block_tridiag_general, cr_solve_g, cr_solve_g_observed, cr_step, densify,
    g_from_state, residual_g, CrState, DenseBackend, HodlrBackend, StopCriterion, StopReason,
};
use qbdcr::hodlr::ArithmeticConfig;
use qbdcr::linalg::DenseMatrix;
use qbdcr::qbd::{random_qbd, random_qbd_with, Normalization, QbdProblem};

fn scalar(x: f64) -> DenseMatrix {
    DenseMatrix::from_fn(1, 1, |_, _| x)
}

#[test]
fn scalar_step_matches_hand_values() {
    // S = (0.4 − 1)⁻¹ = −5/3.
    let s = -5.0 / 3.0;
    let s0 = CrState::from_blocks(scalar(0.3), scalar(0.4), scalar(0.3)).unwrap();
    let s1 = cr_step(&DenseBackend, &s0).unwrap();
    assert_eq!(s1.step_count(), 1);
    let close = |a: &DenseMatrix, v: f64| (a.get(0, 0) - v).abs() <= 1e-15;
    assert!(close(&s1.a1, -0.3 * s * 0.3), "{}", s1.a1.get(0, 0));
    assert!(close(&s1.am1, 0.15));
    assert!(close(&s1.a0, 0.4 - 2.0 * 0.3 * s * 0.3));
    assert!(close(&s1.a0, 0.7));
    assert!(close(&s1.a0hat, -0.45));
}

#[test]
fn one_hodlr_step_matches_dense() {
    let p = random_qbd(20, 2, 5).unwrap();
    let hb = HodlrBackend::new(ArithmeticConfig {
        leaf_size: 4,
        ..ArithmeticConfig::with_tol(1e-14)
    });
    let d = cr_step(&DenseBackend, &CrState::initial(&DenseBackend, &p).unwrap()).unwrap();
    let h = densify(&hb, &cr_step(&hb, &CrState::initial(&hb, &p).unwrap()).unwrap());
    for (x, y) in [(&d.am1, &h.am1), (&d.a0, &h.a0), (&d.a1, &h.a1), (&d.a0hat, &h.a0hat)] {
        assert!(x.max_abs_diff(y) <= 1e-10);
    }
}

#[test]
fn cr_matches_fixed_point_on_positive_recurrent_instances() {
    for seed in positive_recurrent_seeds(30, 1, 8, 1.001) {
        let p = random_qbd(30, 1, seed).unwrap();
        let (oracle, sweeps) = fixed_point_g(&p, 200_000);
        assert!(sweeps < 200_000, "seed {seed}: fixed point did not settle");
        let (g, r) = cr_solve_g(&p, &DenseBackend, StopCriterion::for_size(30)).unwrap();
        assert_eq!(r.stop_reason, StopReason::Converged);
        assert!(g.max_abs_diff(&oracle) <= 1e-6, "seed {seed}: {:e}", g.max_abs_diff(&oracle));
        assert!(r.residual <= 1e-12);
    }
}

#[test]
fn linear_equation_when_a1_vanishes() {
    let p = random_qbd(12, 1, 3).unwrap();
    let am1 = p.am1().try_add(p.a1()).unwrap();
    let q = QbdProblem::new(am1.clone(), p.a0().clone(), DenseMatrix::zeros(12, 12), None, Normalization::Stochastic).unwrap();
    let (g, r) = cr_solve_g(&q, &DenseBackend, StopCriterion::for_size(12)).unwrap();
    assert_eq!(r.iterations, 1);
    let expected = DenseMatrix::identity(12).try_sub(q.a0()).unwrap().solve(&am1).unwrap();
    assert!(g.max_abs_diff(&expected) <= 1e-14);
}

#[test]
fn scalar_null_recurrent_converges_slowly_to_one() {
    // 0.4 − 0.8x + 0.4x² = 0.4(1 − x)², minimal root 1.
    let p = QbdProblem::scalar(0.4, 0.2, 0.4).unwrap();
    let (g, r) = cr_solve_g(&p, &DenseBackend, StopCriterion::for_size(1)).unwrap();
    assert!((g.get(0, 0) - 1.0).abs() <= 1e-6, "{}", g.get(0, 0));
    assert!(r.iterations > 30, "linear convergence expected, got {} steps", r.iterations);
    assert!(!r.warnings.is_empty());
}

#[test]
fn scalar_transient_solution_is_smaller_root() {
    // 0.2 − 0.6x + 0.4x² has roots 0.5 and 1.
    let p = QbdProblem::scalar(0.2, 0.4, 0.4).unwrap();
    let (g, r) = cr_solve_g(&p, &DenseBackend, StopCriterion::for_size(1)).unwrap();
    assert!((g.get(0, 0) - 0.5).abs() <= 1e-15);
    assert!(r.residual < 1e-14);
}

#[test]
fn m100_converges_within_fifteen_steps() {
    for seed in positive_recurrent_seeds(100, 1, 3, 1.001) {
        let p = random_qbd(100, 1, seed).unwrap();
        let (_, r) = cr_solve_g(&p, &DenseBackend, StopCriterion { tol: Some(1e-12), max_iter: 15 }).unwrap();
        assert!(r.residual <= 1e-12, "seed {seed}: {:e}", r.residual);
    }
}

#[test]
fn iterates_stay_nonnegative_and_substochastic() {
    for (norm, seed) in [(Normalization::IdentityAbsorbed, 1), (Normalization::IdentityAbsorbed, 2), (Normalization::Stochastic, 3)] {
        let p = random_qbd_with(40, 2, seed, norm).unwrap();
        let mut s = CrState::initial(&DenseBackend, &p).unwrap();
        for h in 0..12 {
            for b in [&s.am1, &s.a0, &s.a1] {
                assert!(b.min_entry() >= -1e-13, "step {h}: {}", b.min_entry());
            }
            let sum = s.am1.try_add(&s.a0).unwrap().try_add(&s.a1).unwrap();
            let rho = perron_upper_bound(&sum, 200);
            match norm {
                Normalization::IdentityAbsorbed => assert!(rho < 1.0, "step {h}: rho <= {rho}"),
                Normalization::Stochastic => assert!(rho <= 1.0 + 1e-12, "step {h}: rho <= {rho}"),
            }
            s = cr_step(&DenseBackend, &s).unwrap();
        }
    }
}

#[test]
fn convergence_is_quadratic() {
    for seed in positive_recurrent_seeds(30, 1, 5, 1.001) {
        let p = random_qbd(30, 1, seed).unwrap();
        let am1 = p.am1().clone();
        let mut res = Vec::new();
        cr_solve_g_observed(&p, &DenseBackend, StopCriterion::fixed(14), |s| {
            res.push(residual_g(&p, &g_from_state(&DenseBackend, s, &am1)?)?);
            Ok(())
        })
        .unwrap();
        let above: Vec<f64> = res.iter().copied().take_while(|&r| r > 1e-13).collect();
        assert!(above.len() >= 4, "seed {seed}: {res:?}");
        let tail = &above[above.len() - 4..];
        let slope = log_log_slope(tail);
        assert!(slope >= 1.8, "seed {seed}: slope {slope}, residuals {tail:?}");
    }
}

#[test]
fn backends_agree_on_g() {
    for m in [64, 150, 400] {
        let p = random_qbd(m, 1, 2).unwrap();
        let stop = StopCriterion::for_size(m);
        let (gd, _) = cr_solve_g(&p, &DenseBackend, stop).unwrap();
        let (gh, _) = cr_solve_g(&p, &HodlrBackend::new(ArithmeticConfig::with_tol(1e-14)), stop).unwrap();
        assert!(gd.max_abs_diff(&gh) <= 1e-12, "m = {m}: {:e}", gd.max_abs_diff(&gh));
    }
}

#[test]
fn null_recurrent_matrix_instance_warns() {
    let p = null_recurrent_instance(20, 4);
    let (_, r) = cr_solve_g(&p, &DenseBackend, StopCriterion::for_size(20)).unwrap();
    assert!(r.warnings.iter().any(|w| w.contains("null recurrent")), "{:?}", r.warnings);
}

#[test]
fn block_tridiagonal_matches_dense_lu() {
    let m = 16;
    let p = random_qbd(m, 2, 9).unwrap();
    // I − A₀ is an M-matrix and the couplings are −A₋₁, −A₁: a nonsingular
    // block tridiagonal M-matrix.
    let d = DenseMatrix::identity(m).try_sub(p.a0()).unwrap().shift_diagonal(0.05);
    let (l, u) = (p.am1().scale(-1.0), p.a1().scale(-1.0));
    for blocks in [7, 5, 1] {
        let rhs: Vec<DenseMatrix> = (0..blocks)
            .map(|b| DenseMatrix::from_fn(m, 3, |i, c| ((b * 31 + i * 7 + c * 3) % 11) as f64 - 5.0))
            .collect();
        let x = cr_solve_block_tridiag(&d, &l, &u, &rhs, blocks).unwrap();
        let big = assemble_block_tridiag(&d, &l, &u, blocks);
        let b = DenseMatrix::from_fn(m * blocks, 3, |i, c| rhs[i / m].get(i % m, c));
        let reference = big.solve(&b).unwrap();
        for (k, xk) in x.iter().enumerate() {
            assert!(xk.max_abs_diff(&reference.submatrix(k * m, 0, m, 3)) <= 1e-10, "{blocks} blocks, block {k}");
        }
    }
}

#[test]
fn general_block_tridiagonal_rows() {
    let m = 3;
    let n = 6;
    let diag: Vec<DenseMatrix> = (0..n).map(|k| DenseMatrix::identity(m).scale(4.0 + k as f64)).collect();
    let lower: Vec<DenseMatrix> = (0..n).map(|k| DenseMatrix::from_fn(m, m, |i, j| ((i + j + k) % 3) as f64 * 0.3)).collect();
    let upper: Vec<DenseMatrix> = (0..n).map(|k| DenseMatrix::from_fn(m, m, |i, j| ((i * 2 + j + k) % 4) as f64 * 0.2)).collect();
    let rhs: Vec<DenseMatrix> = (0..n).map(|k| DenseMatrix::from_fn(m, 1, |i, _| (k * m + i) as f64)).collect();
    let x = cr_solve_block_tridiag_general(&diag, &lower, &upper, &rhs).unwrap();
    for k in 0..n {
        let mut r = &diag[k] * &x[k];
        if k > 0 {
            r = &r + &(&lower[k] * &x[k - 1]);
        }
        if k + 1 < n {
            r = &r + &(&upper[k] * &x[k + 1]);
        }
        assert!(r.max_abs_diff(&rhs[k]) <= 1e-12);
    }
}

#[test]
fn zero_iteration_limit_reports_max_iter() {
    let p = random_qbd(10, 1, 1).unwrap();
    let (_, r) = cr_solve_g(&p, &DenseBackend, StopCriterion { tol: Some(1e-14), max_iter: 0 }).unwrap();
    assert_eq!(r.stop_reason, StopReason::MaxIter);
    assert_eq!(r.iterations, r.step_seconds.len());
}

#[test]
fn dense_products_drop_entries_below_the_underflow_cutoff() {
    use qbdcr::cr::{Backend, UNDERFLOW_CUTOFF};
    let a = DenseMatrix::from_row_major(2, 2, &[1.0, 1e-160, 0.0, 4.0]).unwrap();
    let p = DenseBackend.mul(&a, &DenseMatrix::identity(2)).unwrap();
    assert_eq!(p.get(0, 1), 0.0);
    assert_eq!((p.get(0, 0), p.get(1, 1)), (1.0, 4.0));
    let tiny = DenseMatrix::from_row_major(1, 1, &[10.0 * UNDERFLOW_CUTOFF]).unwrap();
    assert_eq!(DenseBackend.mul(&tiny, &scalar(1.0)).unwrap().get(0, 0), 10.0 * UNDERFLOW_CUTOFF);
}
