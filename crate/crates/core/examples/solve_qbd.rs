//! Minimal nonnegative solution G of A₋₁ + A₀G + A₁G² = G for a random
//! tridiagonal QBD, with dense and hierarchical arithmetic.
//!
//! cargo run --release --example solve_qbd -- [m] [tol]

use qbdcr::cr::{cr_solve_g, DenseBackend, HodlrBackend, StopCriterion};
use qbdcr::hodlr::ArithmeticConfig;
use qbdcr::qbd::{random_qbd, spectral_annulus};

fn main() -> qbdcr::Result<()> {
    qbdcr::set_threads(1);
    let args: Vec<String> = std::env::args().skip(1).collect();
    let m: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(400);
    let tol: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1e-14);

    let p = random_qbd(m, 1, 7)?;
    let si = spectral_annulus(&p)?;
    println!("m = {m}: {:?}, drift {:.3e}", si.class, p.drift().unwrap_or(f64::NAN));

    let stop = StopCriterion::for_size(m);
    let (g_dense, dense) = cr_solve_g(&p, &DenseBackend, stop)?;
    let (g_h, hodlr) = cr_solve_g(&p, &HodlrBackend::new(ArithmeticConfig::with_tol(tol)), stop)?;
    for r in [&dense, &hodlr] {
        println!(
            "{:5}: {:2} steps, {:?}, residual {:.2e}, {:.3} s",
            r.backend, r.iterations, r.stop_reason, r.residual, r.time_seconds
        );
    }
    let ranks: Vec<usize> = hodlr.max_rank_per_step.iter().flatten().copied().collect();
    println!("hodlr off-diagonal ranks per step: {ranks:?}");
    println!("max |G_dense - G_hodlr| = {:.2e}", g_dense.max_abs_diff(&g_h));
    // G is stochastic for a recurrent chain.
    let worst = g_dense.row_sums().iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    println!("max |G 1 - 1| = {worst:.2e}");
    Ok(())
}
