//! Wall time of 15 CR steps with dense and hierarchical arithmetic as the
//! block size doubles. `qbdcr bench` runs the full grid with medians.
//!
//! cargo run --release --example bench -- [max_m]

use qbdcr::cr::{cr_solve_g, DenseBackend, HodlrBackend, StopCriterion};
use qbdcr::hodlr::ArithmeticConfig;
use qbdcr::qbd::{random_qbd_with, Normalization};

fn main() -> qbdcr::Result<()> {
    qbdcr::set_threads(1);
    let max_m: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(800);
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "m", "dense (s)", "residual", "hodlr (s)", "residual");
    let mut m = 100;
    while m <= max_m {
        let p = random_qbd_with(m, 1, 1, Normalization::IdentityAbsorbed)?;
        let stop = StopCriterion::fixed(15);
        let (_, d) = cr_solve_g(&p, &DenseBackend, stop)?;
        let (_, h) = cr_solve_g(&p, &HodlrBackend::new(ArithmeticConfig::with_tol(1e-12)), stop)?;
        println!(
            "{m:>6} {:>12.3e} {:>12.2e} {:>12.3e} {:>12.2e}",
            d.time_seconds, d.residual, h.time_seconds, h.residual
        );
        m *= 2;
    }
    Ok(())
}
