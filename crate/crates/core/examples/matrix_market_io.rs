//! Saving a problem and a hierarchical matrix to Matrix Market files and
//! reading them back.

use qbdcr::hodlr::{self, ArithmeticConfig};
use qbdcr::linalg::mm;
use qbdcr::qbd::{random_qbd, QbdProblem};

fn main() -> qbdcr::Result<()> {
    let dir = std::env::temp_dir().join(format!("qbdcr-mm-example-{}", std::process::id()));
    let p = random_qbd(40, 2, 3)?;
    p.save(dir.join("problem"), &["random_qbd(40, 2, 3)".to_string()])?;
    let q = QbdProblem::load(dir.join("problem"))?;
    println!("problem round trip exact: {}", p == q);

    let cfg = ArithmeticConfig {
        leaf_size: 8,
        ..ArithmeticConfig::with_tol(1e-13)
    };
    let h = hodlr::build_from_dense(p.a0(), &cfg)?;
    hodlr::save(dir.join("a0_hodlr"), &h, &cfg)?;
    let (h2, cfg2) = hodlr::load(dir.join("a0_hodlr"))?;
    println!(
        "hierarchical A0: depth {}, max rank {}, round trip difference {:.1e}, config preserved: {}",
        h.depth(),
        h.max_offdiag_rank(),
        h.to_dense().max_abs_diff(&h2.to_dense()),
        cfg == cfg2
    );

    let text = mm::to_string(&p.a1().submatrix(0, 0, 2, 2), &["2x2 corner of A1".to_string()]);
    print!("{text}");
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
