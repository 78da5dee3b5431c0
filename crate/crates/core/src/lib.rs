//! Rank-structured cyclic reduction for quadratic matrix equations of
//! quasi-birth-death processes.

pub mod analysis;
pub mod cli;
pub mod cr;
pub mod error;
pub mod hodlr;
pub mod linalg;
pub mod qbd;

pub use error::{Error, Result};

/// Sets the thread count of the dense kernels: sequential for `n <= 1`.
pub fn set_threads(n: usize) {
    if n <= 1 {
        faer::set_global_parallelism(faer::Par::Seq);
    } else {
        faer::set_global_parallelism(faer::Par::rayon(n));
    }
}
