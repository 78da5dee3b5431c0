//! Singular-value decay instrumentation, the theoretical decay bounds, and
//! randomized oracles for the supporting singular-value inequalities.

mod banded;
mod lemmas;

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::cr::{cr_step, Backend, CrState};
use crate::error::{Error, Result};
use crate::linalg::{offdiag_singular_values, DenseMatrix, OffDiagonalSplit};
use crate::qbd::{evaluate_psi, LaurentBlocks, QbdProblem, SpectralInfo};

pub use lemmas::{
    functional_identity_check, lemma_oracles, lemma_oracles_with, FunctionalIdentityReport, LemmaOutcome,
    OracleOptions, PropertyReport, FUNCTIONAL_IDENTITY_TOL,
};

/// Which CR coefficient a [`DecayProfile`] probes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbedBlock {
    Am1,
    #[default]
    A0,
    A1,
}

/// Off-diagonal singular values of one CR coefficient, recorded at every
/// step `h = 0..=steps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub schema_version: u32,
    pub size: usize,
    pub band: usize,
    pub steps: usize,
    pub split: OffDiagonalSplit,
    pub block: ProbedBlock,
    pub backend: String,
    pub tol: Option<f64>,
    /// Rescaling `θ` applied to the blocks before running CR, if any.
    pub theta: Option<f64>,
    /// `sigma[h]` is the nonincreasing singular-value list at step `h`.
    pub sigma: Vec<Vec<f64>>,
    /// `max_i ‖A_i⁽ʰ⁾‖₂` of the (rescaled) iterates at step `h`.
    pub norm_per_step: Vec<f64>,
    pub time_seconds: f64,
}

impl DecayProfile {
    /// Largest `‖A_i⁽ʰ⁾‖₂` over all recorded steps.
    pub fn l_max(&self) -> f64 {
        self.norm_per_step.iter().copied().fold(0.0, f64::max)
    }

    /// Number of singular values above `rel · σ₁` at every step.
    pub fn threshold_ranks(&self, rel: f64) -> Vec<usize> {
        self.sigma
            .iter()
            .map(|s| match s.first() {
                Some(&s1) if s1 > 0.0 => s.iter().filter(|&&x| x > rel * s1).count(),
                _ => 0,
            })
            .collect()
    }

    /// CSV rows `h,s,sigma,bound_general,bound_tridiag` with `s` 1-based.
    /// `bounds[h]` supplies the bound curves for step `h`; missing curves are
    /// written as empty fields.
    pub fn write_csv<W: Write>(&self, out: W, bounds: &[DecayBound]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["h", "s", "sigma", "bound_general", "bound_tridiag"])?;
        for (h, sig) in self.sigma.iter().enumerate() {
            let b = bounds.iter().find(|b| b.h == h);
            for (i, &x) in sig.iter().enumerate() {
                let s = i + 1;
                let (g, t) = match b {
                    Some(b) => (format!("{:e}", b.general(s)), format!("{:e}", b.tridiagonal(s))),
                    None => (String::new(), String::new()),
                };
                w.write_record([h.to_string(), s.to_string(), format!("{x:e}"), g, t])?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// `(A₋₁/θ, A₀, θA₁)`, the blocks of `φ_θ(z) = φ(θz)`.
pub fn rescaled_blocks<S: LaurentBlocks + ?Sized>(s: &S, theta: f64) -> (DenseMatrix, DenseMatrix, DenseMatrix) {
    let [am1, a0, a1] = s.blocks();
    (am1.scale(1.0 / theta), a0.into_owned(), a1.scale(theta))
}

/// Runs `steps` CR steps and records the off-diagonal singular values of
/// `A₀⁽ʰ⁾` selected by `split`.
pub fn decay_profile<B: Backend>(
    p: &QbdProblem,
    steps: usize,
    split: OffDiagonalSplit,
    backend: &B,
) -> Result<DecayProfile> {
    decay_profile_with(p, steps, split, backend, ProbedBlock::A0, None)
}

/// [`decay_profile`] with the probed coefficient and an optional rescaling
/// `θ`. Rescaling leaves `A₀⁽ʰ⁾` unchanged and multiplies `A₋₁⁽ʰ⁾`, `A₁⁽ʰ⁾`
/// by `θ^{∓2^h}`.
pub fn decay_profile_with<B: Backend>(
    p: &QbdProblem,
    steps: usize,
    split: OffDiagonalSplit,
    backend: &B,
    block: ProbedBlock,
    theta: Option<f64>,
) -> Result<DecayProfile> {
    if steps == 0 {
        return Err(Error::InvalidArgument("decay profile needs at least one step".into()));
    }
    let m = p.size();
    split.block(m, m)?;
    if let Some(th) = theta {
        if !(th.is_finite() && th > 0.0) {
            return Err(Error::InvalidArgument(format!("rescaling theta = {th} must be positive")));
        }
    }
    let blocks = match theta {
        Some(th) => rescaled_blocks(p, th),
        None => (p.am1().clone(), p.a0().clone(), p.a1().clone()),
    };
    let start = Instant::now();
    let mut state = CrState::initial_from_blocks(backend, &blocks)?;
    let mut sigma = Vec::with_capacity(steps + 1);
    let mut norms = Vec::with_capacity(steps + 1);
    loop {
        let d = [&state.am1, &state.a0, &state.a1].map(|x| backend.to_dense(x));
        let probed = match block {
            ProbedBlock::Am1 => &d[0],
            ProbedBlock::A0 => &d[1],
            ProbedBlock::A1 => &d[2],
        };
        sigma.push(offdiag_singular_values(probed, split)?);
        norms.push(d.iter().map(|x| x.norm2()).fold(0.0, f64::max));
        if state.h == steps {
            break;
        }
        state = cr_step(backend, &state)?;
    }
    Ok(DecayProfile {
        schema_version: 1,
        size: m,
        band: p.band(),
        steps,
        split,
        block,
        backend: backend.name().to_string(),
        tol: backend.tol(),
        theta,
        sigma,
        norm_per_step: norms,
        time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Grid maximum of `‖φ_θ(z)⁻¹‖₂` over `t^{-0.9} ≤ |z| ≤ t^{0.9}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub argmax_re: f64,
    pub argmax_im: f64,
    pub radii: Vec<f64>,
    pub points_per_circle: usize,
    /// `‖φ_θ(1)⁻¹‖₂`.
    pub phi_one_inv_norm: f64,
}

pub const DELTA_CIRCLES: usize = 5;
pub const DELTA_POINTS_PER_CIRCLE: usize = 64;
pub const DELTA_RADIUS_EXPONENT: f64 = 0.9;

/// Estimates `δ ≥ ‖φ_θ(z)⁻¹‖₂` on the annulus of `φ_θ`, `θ = si.theta`, with
/// 64 points on each of 5 circles whose radii are geometrically spaced in
/// `[t^{-0.9}, t^{0.9}]`. Each norm is obtained by power iteration with
/// banded factorizations, so the result is a lower bound on the true sup.
pub fn estimate_delta(si: &SpectralInfo, p: &QbdProblem) -> Result<DeltaEstimate> {
    check_annulus(si)?;
    let blocks = rescaled_blocks(p, si.theta);
    let band = p.band();
    let log_t = si.t.ln();
    let radii: Vec<f64> = (0..DELTA_CIRCLES)
        .map(|j| {
            let e = -DELTA_RADIUS_EXPONENT + 2.0 * DELTA_RADIUS_EXPONENT * j as f64 / (DELTA_CIRCLES - 1) as f64;
            (e * log_t).exp()
        })
        .collect();
    let mut best = (0.0, c64::new(1.0, 0.0));
    for &r in &radii {
        for k in 0..DELTA_POINTS_PER_CIRCLE {
            let a = 2.0 * PI * k as f64 / DELTA_POINTS_PER_CIRCLE as f64;
            let z = c64::from_polar(r, a);
            let v = inverse_norm(&blocks, band, z)?;
            if v > best.0 {
                best = (v, z);
            }
        }
    }
    let phi_one = inverse_norm(&blocks, band, c64::new(1.0, 0.0))?;
    Ok(DeltaEstimate {
        delta: best.0,
        argmax_re: best.1.re,
        argmax_im: best.1.im,
        radii,
        points_per_circle: DELTA_POINTS_PER_CIRCLE,
        phi_one_inv_norm: phi_one,
    })
}

fn inverse_norm<S: LaurentBlocks + ?Sized>(s: &S, band: usize, z: c64) -> Result<f64> {
    let lu = banded::BandLu::phi(s, band, z)
        .map_err(|_| Error::singular(format!("phi_theta({}{:+}i) in the delta grid", z.re, z.im)))?;
    Ok(lu.inverse_norm2(2000))
}

/// Exact `‖φ(z)⁻¹‖₂` by dense inversion and SVD, for cross-checks.
pub fn inverse_norm_dense<S: LaurentBlocks + ?Sized>(s: &S, z: c64) -> Result<f64> {
    evaluate_psi(s, z)?.norm2()
}

fn check_annulus(si: &SpectralInfo) -> Result<()> {
    if !(si.t > 1.0) || !si.t.is_finite() || !(si.theta > 0.0) || !si.theta.is_finite() {
        return Err(Error::BoundUndefined { t: si.t });
    }
    Ok(())
}

/// Constants and curves of the off-diagonal decay bound at step `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    pub schema_version: u32,
    pub h: usize,
    pub t: f64,
    pub theta: f64,
    pub delta: f64,
    pub l: f64,
    /// Quasiseparable rank used in the exponent: the band of the problem,
    /// at least 1.
    pub k: usize,
    /// `N = 2^h`.
    pub n: f64,
    /// `4Lδ² / ((1 − t^{−N})(1 − t^{−1}))`.
    pub m: f64,
    /// `(1 + 3L)(1 + L + L²‖φ_θ(1)⁻¹‖₂)`.
    pub kappa: f64,
    pub phi_one_inv_norm: f64,
    /// Natural-log slope and intercept of `3MK·e^{−((s−3k)/(6k)) log t}`.
    pub slope_general: f64,
    pub intercept_general: f64,
    /// Natural-log slope and intercept of `MK·e^{−(s/2) log t}`.
    pub slope_tridiagonal: f64,
    pub intercept_tridiagonal: f64,
    /// Whether the tridiagonal curve applies (`band == 1`).
    pub tridiagonal_applies: bool,
}

/// Evaluates the decay constants for step `h` from the annulus `si`, a
/// `δ` estimate and a norm bound `l ≥ ‖A_i⁽ʰ⁾‖₂`.
pub fn decay_bound(si: &SpectralInfo, p: &QbdProblem, h: usize, delta: &DeltaEstimate, l: f64) -> Result<DecayBound> {
    check_annulus(si)?;
    if !(l >= 0.0) || !l.is_finite() {
        return Err(Error::InvalidArgument(format!("norm bound L = {l} must be finite and nonnegative")));
    }
    let log_t = si.t.ln();
    let k = p.band().max(1);
    let n = 2f64.powi(h.min(1023) as i32);
    let m = bound_m(l, delta.delta, n, si.t);
    let kappa = (1.0 + 3.0 * l) * (1.0 + l + l * l * delta.phi_one_inv_norm);
    let k_f = k as f64;
    Ok(DecayBound {
        schema_version: 1,
        h,
        t: si.t,
        theta: si.theta,
        delta: delta.delta,
        l,
        k,
        n,
        m,
        kappa,
        phi_one_inv_norm: delta.phi_one_inv_norm,
        slope_general: -log_t / (6.0 * k_f),
        intercept_general: (3.0 * m * kappa).ln() + log_t / 2.0,
        slope_tridiagonal: -log_t / 2.0,
        intercept_tridiagonal: (m * kappa).ln(),
        tridiagonal_applies: k == 1,
    })
}

/// `M = 4Lδ² / ((1 − e^{−N log t})(1 − t^{−1}))`.
pub fn bound_m(l: f64, delta: f64, n: f64, t: f64) -> f64 {
    let log_t = t.ln();
    let a = -(-n * log_t).exp_m1();
    let b = -(-log_t).exp_m1();
    4.0 * l * delta * delta / (a * b)
}

impl DecayBound {
    /// `3MK·e^{−((s−3k)/(6k)) log t}`.
    pub fn general(&self, s: usize) -> f64 {
        (self.intercept_general + self.slope_general * s as f64).exp()
    }

    /// `MK·e^{−(s/2) log t}`.
    pub fn tridiagonal(&self, s: usize) -> f64 {
        (self.intercept_tridiagonal + self.slope_tridiagonal * s as f64).exp()
    }

    /// The curve matching the band: tridiagonal for `k = 1`, general
    /// otherwise.
    pub fn applicable(&self, s: usize) -> f64 {
        if self.tridiagonal_applies {
            self.tridiagonal(s)
        } else {
            self.general(s)
        }
    }
}

/// Outcome of comparing a profile with its bound curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub checked: usize,
    pub violations: usize,
    /// Largest `σ_s / bound(s)` over all steps and indices.
    pub max_ratio: f64,
    pub worst_h: usize,
    pub worst_s: usize,
}

/// Compares every measured `σ_s` at step `h` with `bounds[h].applicable(s)`.
pub fn check_profile_against_bounds(profile: &DecayProfile, bounds: &[DecayBound]) -> BoundCheck {
    let mut out = BoundCheck {
        checked: 0,
        violations: 0,
        max_ratio: 0.0,
        worst_h: 0,
        worst_s: 0,
    };
    for b in bounds {
        let Some(sig) = profile.sigma.get(b.h) else { continue };
        for (i, &x) in sig.iter().enumerate() {
            let bound = b.applicable(i + 1);
            out.checked += 1;
            let ratio = if bound > 0.0 { x / bound } else if x > 0.0 { f64::INFINITY } else { 0.0 };
            if ratio > out.max_ratio {
                out.max_ratio = ratio;
                out.worst_h = b.h;
                out.worst_s = i + 1;
            }
            if ratio > 1.0 {
                out.violations += 1;
            }
        }
    }
    out
}

/// Least-squares slope of `ln σ_s` against `s` over the values above
/// `floor · σ₁`; `None` with fewer than 3 such values.
pub fn log_slope(sigma: &[f64], floor: f64) -> Option<f64> {
    let s1 = *sigma.first()?;
    if !(s1 > 0.0) {
        return None;
    }
    let pts: Vec<(f64, f64)> = sigma
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > floor * s1)
        .map(|(i, &x)| ((i + 1) as f64, x.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Gnuplot script plotting `csv_name` as written by
/// [`DecayProfile::write_csv`], one curve per step for the listed steps.
pub fn gnuplot_script(csv_name: &str, steps: &[usize], title: &str) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set logscale y\n");
    s.push_str("set xlabel 's'\n");
    s.push_str("set ylabel 'sigma_s'\n");
    s.push_str(&format!("set title '{}'\n", title.replace('\'', "")));
    s.push_str("set key outside right\n");
    let mut parts = Vec::new();
    for &h in steps {
        parts.push(format!(
            "'{csv_name}' using 2:($1=={h} && $3>0 ? $3 : 1/0) every ::1 with points title 'h={h}'"
        ));
    }
    if let Some(&h) = steps.last() {
        parts.push(format!(
            "'{csv_name}' using 2:($1=={h} && strlen(strcol(5))>0 ? $5 : 1/0) every ::1 with lines title 'bound h={h}'"
        ));
    }
    s.push_str("plot ");
    s.push_str(&parts.join(", \\\n     "));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr::DenseBackend;
    use crate::qbd::{random_qbd, spectral_annulus};

    #[test]
    fn m_decreases_as_t_grows() {
        let (l, d, n) = (1.0, 2.0, 4.0);
        let a = bound_m(l, d, n, 1.01);
        let b = bound_m(l, d, n, 1.1);
        let c = bound_m(l, d, n, 2.0);
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn scalar_transient_slope() {
        let p = QbdProblem::scalar(0.2, 0.4, 0.4).unwrap();
        let si = spectral_annulus(&p).unwrap();
        let d = estimate_delta(&si, &p).unwrap();
        let b = decay_bound(&si, &p, 0, &d, p.norm_bound()).unwrap();
        let expected = -(2f64.sqrt().ln()) / 2.0;
        assert!((b.slope_tridiagonal - expected).abs() < 1e-12);
        assert!(b.tridiagonal_applies);
    }

    #[test]
    fn null_recurrent_bound_is_undefined() {
        let p = QbdProblem::scalar(0.3, 0.4, 0.3).unwrap();
        let si = spectral_annulus(&p).unwrap();
        assert!(matches!(estimate_delta(&si, &p), Err(Error::BoundUndefined { .. })));
    }

    #[test]
    fn zero_steps_rejected_and_first_list_is_corner() {
        let p = random_qbd(16, 1, 3).unwrap();
        let split = OffDiagonalSplit::largest_south_west(16);
        assert!(decay_profile(&p, 0, split, &DenseBackend).is_err());
        let prof = decay_profile(&p, 1, split, &DenseBackend).unwrap();
        assert_eq!(prof.sigma.len(), 2);
        let nonzero = prof.sigma[0].iter().filter(|&&x| x > 0.0).count();
        assert_eq!(nonzero, 1);
        assert!((prof.sigma[0][0] - p.a0().get(8, 7)).abs() < 1e-15);
    }

    #[test]
    fn banded_delta_matches_dense_norm() {
        let p = random_qbd(12, 2, 1).unwrap();
        let th = 0.97;
        let blocks = rescaled_blocks(&p, th);
        for z in [c64::new(0.3, 0.9), c64::new(-1.05, 0.1)] {
            let a = inverse_norm(&blocks, 2, z).unwrap();
            let b = inverse_norm_dense(&blocks, z).unwrap();
            assert!((a - b).abs() <= 1e-6 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn slope_of_geometric_sequence() {
        let s: Vec<f64> = (0..10).map(|j| 0.5f64.powi(j)).collect();
        assert!((log_slope(&s, 1e-16).unwrap() - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn csv_has_fixed_columns() {
        let p = random_qbd(8, 1, 0).unwrap();
        let prof = decay_profile(&p, 1, OffDiagonalSplit::largest_south_west(8), &DenseBackend).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("h,s,sigma,bound_general,bound_tridiag\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 4);
    }
}
