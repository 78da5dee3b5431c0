//! Oracles shared by the integration tests and the acceptance runner. None
//! of them calls into the cyclic reduction code.

#![allow(dead_code)]

use qbdcr::linalg::DenseMatrix;
use qbdcr::qbd::{random_qbd, spectral_annulus, Normalization, QbdProblem, RecurrenceClass};

/// Natural fixed-point iteration `X ← A₋₁ + A₀X + A₁X²` from `X = 0`. Stops
/// when a sweep changes no entry by more than `1e-16` or after `max_sweeps`.
/// Returns the iterate and the number of sweeps.
pub fn fixed_point_g(p: &QbdProblem, max_sweeps: usize) -> (DenseMatrix, usize) {
    let m = p.size();
    let mut x = DenseMatrix::zeros(m, m);
    for k in 1..=max_sweeps {
        let x2 = &x * &x;
        let next = &(p.am1() + &(p.a0() * &x)) + &(p.a1() * &x2);
        let change = next.max_abs_diff(&x);
        x = next;
        if change <= 1e-16 {
            return (x, k);
        }
    }
    (x, max_sweeps)
}

/// The first `count` seeds whose random stochastic instance of size `m` is
/// positive recurrent with annulus ratio `t >= min_t`. The selection looks at
/// the spectrum only.
pub fn positive_recurrent_seeds(m: usize, band: usize, count: usize, min_t: f64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        let p = random_qbd(m, band, seed).unwrap();
        let si = spectral_annulus(&p).unwrap();
        if si.class == RecurrenceClass::PositiveRecurrent && si.t >= min_t {
            out.push(seed);
        }
        seed += 1;
        assert!(seed < 10_000, "not enough positive recurrent instances");
    }
    out
}

/// Reflection-symmetric instance (`A₋₁ = A₁`), hence with zero drift.
pub fn null_recurrent_instance(m: usize, seed: u64) -> QbdProblem {
    let p = random_qbd(m, 1, seed).unwrap();
    let side = p.am1().try_add(p.a1()).unwrap().scale(0.5);
    QbdProblem::new(side.clone(), p.a0().clone(), side, Some(1), Normalization::Stochastic).unwrap()
}

/// Collatz–Wielandt upper bound `max_i (Ax)_i / x_i` on the spectral radius
/// of a nonnegative matrix, after `iters` power steps from the ones vector.
/// Entries below zero (roundoff) are clamped to zero.
pub fn perron_upper_bound(a: &DenseMatrix, iters: usize) -> f64 {
    let n = a.rows();
    let a = DenseMatrix::from_fn(n, n, |i, j| a.get(i, j).max(0.0));
    let mut x = vec![1.0; n];
    let apply = |x: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| a.get(i, j) * x[j]).sum()).collect() };
    for _ in 0..iters {
        let y = apply(&x);
        let s = y.iter().copied().fold(0.0, f64::max);
        if s == 0.0 {
            return 0.0;
        }
        x = y.iter().map(|v| v / s + 1e-300).collect();
    }
    let y = apply(&x);
    (0..n).map(|i| y[i] / x[i]).fold(0.0, f64::max)
}

/// Dense assembly of the block tridiagonal block Toeplitz matrix with
/// `blocks` block rows.
pub fn assemble_block_tridiag(d: &DenseMatrix, l: &DenseMatrix, u: &DenseMatrix, blocks: usize) -> DenseMatrix {
    let m = d.rows();
    DenseMatrix::from_fn(m * blocks, m * blocks, |i, j| {
        let (r, c) = (i % m, j % m);
        match (j / m) as isize - (i / m) as isize {
            0 => d.get(r, c),
            -1 => l.get(r, c),
            1 => u.get(r, c),
            _ => 0.0,
        }
    })
}

/// Least-squares slope of `ln r_{h+1}` against `ln r_h` over consecutive
/// pairs.
pub fn log_log_slope(r: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = r.windows(2).map(|w| (w[0].ln(), w[1].ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
