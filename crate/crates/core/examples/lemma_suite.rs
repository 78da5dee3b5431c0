//! Randomized checks of the singular-value inequalities behind the decay
//! bounds, and of the averaging identity satisfied by the CR iterates.
//!
//! cargo run --release --example lemma_suite -- [trials] [seed]

use qbdcr::analysis::{functional_identity_check, lemma_oracles};

fn main() -> qbdcr::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let trials: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);

    let report = lemma_oracles(seed, trials)?;
    for o in &report.outcomes {
        let tag = if o.informational { " (informational)" } else { "" };
        println!(
            "{:38} {:6} checks {:4} violations  max ratio {:.4}{tag}",
            o.name, o.checks, o.violations, o.max_ratio
        );
    }
    let fi = functional_identity_check(seed, 3, 40, 3, 8)?;
    println!("averaging identity up to h = 3: max relative error {:.2e}", fi.max_error);
    println!("all suites passed: {}", report.passed && fi.violations == 0);
    Ok(())
}
