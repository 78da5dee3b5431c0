//! Cyclic reduction for `A₋₁ + (A₀ − I)X + A₁X² = 0` over a pluggable
//! arithmetic backend, and the block tridiagonal system solver.

mod backend;
mod tridiag;

use std::borrow::Cow;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::qbd::{LaurentBlocks, QbdProblem};

pub use backend::{Backend, DenseBackend, HodlrBackend, UNDERFLOW_CUTOFF};
pub use tridiag::{cr_solve_block_tridiag, cr_solve_block_tridiag_general};

/// Iterates `(A₋₁⁽ʰ⁾, A₀⁽ʰ⁾, A₁⁽ʰ⁾, Â₀⁽ʰ⁾)` after `h` steps.
#[derive(Clone, Debug)]
pub struct CrState<M> {
    pub am1: M,
    pub a0: M,
    pub a1: M,
    pub a0hat: M,
    pub h: usize,
}

impl<M> CrState<M> {
    pub fn step_count(&self) -> usize {
        self.h
    }
}

impl<M: Clone> CrState<M> {
    /// `h = 0` state with `Â₀ = A₀ − I`.
    pub fn initial<B: Backend<Matrix = M>>(backend: &B, p: &QbdProblem) -> Result<Self> {
        Self::initial_from_blocks(backend, p)
    }

    /// `h = 0` state for an arbitrary Laurent triple, e.g. a rescaled one.
    pub fn initial_from_blocks<B, S>(backend: &B, s: &S) -> Result<Self>
    where
        B: Backend<Matrix = M>,
        S: LaurentBlocks + ?Sized,
    {
        let [am1, a0, a1] = s.blocks();
        let m = a0.rows();
        for (name, b) in [("CrState A-1", &am1), ("CrState A0", &a0), ("CrState A1", &a1)] {
            if b.shape() != (m, m) {
                return Err(Error::Shape {
                    op: name,
                    expected: (m, m),
                    found: b.shape(),
                });
            }
        }
        let am1 = backend.from_dense(&am1)?;
        let a0 = backend.from_dense(&a0)?;
        let a1 = backend.from_dense(&a1)?;
        let a0hat = backend.shift_diagonal(&a0, -1.0);
        Ok(CrState { am1, a0, a1, a0hat, h: 0 })
    }
}

impl CrState<DenseMatrix> {
    pub fn from_blocks(am1: DenseMatrix, a0: DenseMatrix, a1: DenseMatrix) -> Result<Self> {
        let m = a0.rows();
        for (name, b) in [("CrState A-1", &am1), ("CrState A0", &a0), ("CrState A1", &a1)] {
            if b.shape() != (m, m) {
                return Err(Error::Shape {
                    op: name,
                    expected: (m, m),
                    found: b.shape(),
                });
            }
        }
        let a0hat = a0.shift_diagonal(-1.0);
        Ok(CrState { am1, a0, a1, a0hat, h: 0 })
    }
}

impl LaurentBlocks for CrState<DenseMatrix> {
    fn blocks(&self) -> [Cow<'_, DenseMatrix>; 3] {
        [Cow::Borrowed(&self.am1), Cow::Borrowed(&self.a0), Cow::Borrowed(&self.a1)]
    }
}

/// Dense copy of a state of any backend.
pub fn densify<B: Backend>(backend: &B, s: &CrState<B::Matrix>) -> CrState<DenseMatrix> {
    CrState {
        am1: backend.to_dense(&s.am1),
        a0: backend.to_dense(&s.a0),
        a1: backend.to_dense(&s.a1),
        a0hat: backend.to_dense(&s.a0hat),
        h: s.h,
    }
}

/// One step of the recurrence, with `S = (A₀ − I)⁻¹` formed explicitly:
///
/// ```text
/// A₁'  = −A₁ S A₁
/// A₀'  =  A₀ − A₁ S A₋₁ − A₋₁ S A₁
/// A₋₁' = −A₋₁ S A₋₁
/// Â₀'  =  Â₀ − A₁ S A₋₁
/// ```
pub fn cr_step<B: Backend>(backend: &B, s: &CrState<B::Matrix>) -> Result<CrState<B::Matrix>> {
    let shifted = backend.shift_diagonal(&s.a0, -1.0);
    let inv = backend.invert(&shifted).map_err(|e| match e {
        Error::Singular { context } => Error::singular(format!("CR step {}: A0 - I ({context})", s.h)),
        other => other,
    })?;
    let x1 = backend.mul(&inv, &s.a1)?;
    let xm1 = backend.mul(&inv, &s.am1)?;
    let t = backend.mul(&s.a1, &xm1)?;
    let a1 = backend.scale(&backend.mul(&s.a1, &x1)?, -1.0);
    let am1 = backend.scale(&backend.mul(&s.am1, &xm1)?, -1.0);
    let a0 = backend.sub(&backend.sub(&s.a0, &t)?, &backend.mul(&s.am1, &x1)?)?;
    let a0hat = backend.sub(&s.a0hat, &t)?;
    Ok(CrState {
        am1,
        a0,
        a1,
        a0hat,
        h: s.h + 1,
    })
}

/// `−(Â₀⁽ʰ⁾)⁻¹ A₋₁` with the original `A₋₁`, computed in the backend's own
/// arithmetic.
pub fn g_from_state<B: Backend>(backend: &B, s: &CrState<B::Matrix>, am1: &B::Matrix) -> Result<DenseMatrix> {
    let inv = backend.invert(&s.a0hat).map_err(|e| match e {
        Error::Singular { context } => Error::singular(format!("G after {} steps: A0hat ({context})", s.h)),
        other => other,
    })?;
    let g = backend.mul(&inv, am1)?;
    Ok(backend.to_dense(&g).scale(-1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopCriterion {
    /// Stop once `min(‖A₁⁽ʰ⁾‖∞, ‖A₋₁⁽ʰ⁾‖∞) <= tol`; `None` runs exactly
    /// `max_iter` steps.
    pub tol: Option<f64>,
    pub max_iter: usize,
}

impl StopCriterion {
    pub const DEFAULT_MAX_ITER: usize = 50;

    /// `tol = 1e-14 m`, at most 50 steps.
    pub fn for_size(m: usize) -> Self {
        StopCriterion {
            tol: Some(1e-14 * m as f64),
            max_iter: Self::DEFAULT_MAX_ITER,
        }
    }

    /// Exactly `n` steps.
    pub fn fixed(n: usize) -> Self {
        StopCriterion { tol: None, max_iter: n }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIter,
    Singular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub size: usize,
    pub band: usize,
    pub backend: String,
    /// Truncation threshold, null for the dense backend.
    pub tol: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Wall time of the reduction steps plus the formation of `G`.
    pub time_seconds: f64,
    pub step_seconds: Vec<f64>,
    pub g_seconds: f64,
    /// Largest off-diagonal rank over the four iterates after each step,
    /// null for the dense backend.
    pub max_rank_per_step: Vec<Option<usize>>,
    pub stop_reason: StopReason,
    pub stop_tol: Option<f64>,
    pub max_iter: usize,
    pub warnings: Vec<String>,
}

/// `‖A₋₁ + (A₀ − I)G + A₁G²‖∞`.
pub fn residual_g(p: &QbdProblem, g: &DenseMatrix) -> Result<f64> {
    let b = p.a0().shift_diagonal(-1.0);
    let g2 = g.try_matmul(g)?;
    let r = p.am1().try_add(&b.try_matmul(g)?)?.try_add(&p.a1().try_matmul(&g2)?)?;
    Ok(r.norm_inf())
}

/// Runs cyclic reduction and returns `G` with a report.
pub fn cr_solve_g<B: Backend>(p: &QbdProblem, backend: &B, stop: StopCriterion) -> Result<(DenseMatrix, SolveReport)> {
    cr_solve_g_observed(p, backend, stop, |_| Ok(()))
}

/// [`cr_solve_g`] with a callback on the initial state and after every step.
/// Time spent in the callback is not counted.
pub fn cr_solve_g_observed<B: Backend>(
    p: &QbdProblem,
    backend: &B,
    stop: StopCriterion,
    mut observe: impl FnMut(&CrState<B::Matrix>) -> Result<()>,
) -> Result<(DenseMatrix, SolveReport)> {
    p.validate()?;
    let mut state = CrState::initial(backend, p)?;
    let am1 = state.am1.clone();
    observe(&state)?;
    let mut step_seconds = Vec::new();
    let mut ranks = Vec::new();
    let mut reason = StopReason::MaxIter;
    while state.h < stop.max_iter {
        let start = Instant::now();
        state = cr_step(backend, &state)?;
        let small = backend.norm_inf(&state.a1).min(backend.norm_inf(&state.am1));
        step_seconds.push(start.elapsed().as_secs_f64());
        ranks.push(
            [&state.am1, &state.a0, &state.a1, &state.a0hat]
                .iter()
                .map(|m| backend.max_offdiag_rank(m))
                .max()
                .flatten(),
        );
        observe(&state)?;
        if stop.tol.is_some_and(|tol| small <= tol) {
            reason = StopReason::Converged;
            break;
        }
    }
    let start = Instant::now();
    let g = g_from_state(backend, &state, &am1)?;
    let g_seconds = start.elapsed().as_secs_f64();
    let residual = residual_g(p, &g)?;
    let mut warnings = Vec::new();
    if let Some(d) = p.drift() {
        if d.abs() < NULL_DRIFT_TOL {
            warnings.push(format!(
                "drift {d:.3e} is numerically zero: the chain looks null recurrent and convergence is only linear"
            ));
        }
    }
    let report = SolveReport {
        schema_version: 1,
        size: p.size(),
        band: p.band(),
        backend: backend.name().to_string(),
        tol: backend.tol(),
        iterations: state.h,
        residual,
        time_seconds: step_seconds.iter().sum::<f64>() + g_seconds,
        step_seconds,
        g_seconds,
        max_rank_per_step: ranks,
        stop_reason: reason,
        stop_tol: stop.tol,
        max_iter: stop.max_iter,
        warnings,
    };
    Ok((g, report))
}

/// `|drift|` below which [`cr_solve_g`] warns about null recurrence.
pub const NULL_DRIFT_TOL: f64 = 1e-8;

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_state(am1: f64, a0: f64, a1: f64) -> CrState<DenseMatrix> {
        let s = |x: f64| DenseMatrix::from_fn(1, 1, |_, _| x);
        CrState::from_blocks(s(am1), s(a0), s(a1)).unwrap()
    }

    #[test]
    fn decoupled_step_is_stationary() {
        let a0 = DenseMatrix::from_row_major(2, 2, &[0.5, 0.1, 0.2, 0.3]).unwrap();
        let s = CrState::from_blocks(DenseMatrix::zeros(2, 2), a0.clone(), DenseMatrix::zeros(2, 2)).unwrap();
        let n = cr_step(&DenseBackend, &s).unwrap();
        assert_eq!(n.h, 1);
        assert_eq!(n.a1, DenseMatrix::zeros(2, 2));
        assert_eq!(n.am1, DenseMatrix::zeros(2, 2));
        assert_eq!(n.a0, a0);
        assert_eq!(n.a0hat, s.a0hat);
    }

    #[test]
    fn singular_step_names_index() {
        let s = scalar_state(0.0, 1.0, 0.0);
        let e = cr_step(&DenseBackend, &s).unwrap_err();
        assert!(e.to_string().contains("CR step 0"), "{e}");
    }

    #[test]
    fn linear_case_stops_after_one_step() {
        let am1 = DenseMatrix::from_row_major(2, 2, &[0.3, 0.1, 0.2, 0.2]).unwrap();
        let a0 = DenseMatrix::from_row_major(2, 2, &[0.4, 0.2, 0.1, 0.5]).unwrap();
        let p = QbdProblem::new(am1.clone(), a0.clone(), DenseMatrix::zeros(2, 2), None, Default::default()).unwrap();
        let (g, r) = cr_solve_g(&p, &DenseBackend, StopCriterion::for_size(2)).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.stop_reason, StopReason::Converged);
        let expected = DenseMatrix::identity(2).try_sub(&a0).unwrap().solve(&am1).unwrap();
        assert!(g.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn zero_iterations_hit_max_iter() {
        let p = QbdProblem::scalar(0.4, 0.4, 0.2).unwrap();
        let (_, r) = cr_solve_g(&p, &DenseBackend, StopCriterion { tol: Some(1e-14), max_iter: 0 }).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.stop_reason, StopReason::MaxIter);
    }

    #[test]
    fn residual_of_trivial_candidates() {
        let p = QbdProblem::scalar(0.4, 0.2, 0.4).unwrap();
        assert!(residual_g(&p, &DenseMatrix::identity(1)).unwrap() < 1e-16);
        let r0 = residual_g(&p, &DenseMatrix::zeros(1, 1)).unwrap();
        assert_eq!(r0, 0.4);
    }
}
