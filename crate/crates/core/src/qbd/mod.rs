//! Discrete-time QBD problems: validation, random instances, file I/O,
//! matrix-function evaluation and the spectral annulus.

mod functions;
mod spectral;

use std::borrow::Cow;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mm, DenseMatrix};

pub use functions::{coefficients_from_samples, evaluate_phi, evaluate_psi, LaurentSamples};
pub use spectral::{spectral_annulus, RecurrenceClass, Root, SpectralInfo};

/// How the three blocks were scaled when the instance was generated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `A₋₁ + A₀ + A₁` is stochastic.
    #[default]
    Stochastic,
    /// The identity counts as one extra unit of raw weight per row, so each
    /// row is divided by `raw_row_sum + 1` and `A₋₁ + A₀ + A₁` is strictly
    /// substochastic.
    IdentityAbsorbed,
}

/// Tolerance on the row sums of `A₋₁ + A₀ + A₁`.
pub const STOCHASTIC_TOL: f64 = 1e-13;

/// Anything that carries a Laurent triple `(A₋₁, A₀, A₁)`.
pub trait LaurentBlocks {
    fn blocks(&self) -> [Cow<'_, DenseMatrix>; 3];
}

#[derive(Clone, Debug, PartialEq)]
pub struct QbdProblem {
    am1: DenseMatrix,
    a0: DenseMatrix,
    a1: DenseMatrix,
    band: usize,
    qs_rank: usize,
    normalization: Normalization,
    seed: Option<u64>,
}

impl QbdProblem {
    /// Validated problem. `band` defaults to the largest half-bandwidth of
    /// the three blocks and `qs_rank` to `band`.
    pub fn new(
        am1: DenseMatrix,
        a0: DenseMatrix,
        a1: DenseMatrix,
        band: Option<usize>,
        normalization: Normalization,
    ) -> Result<Self> {
        let actual = am1.half_bandwidth().max(a0.half_bandwidth()).max(a1.half_bandwidth());
        let band = band.unwrap_or(actual);
        let p = QbdProblem {
            am1,
            a0,
            a1,
            band,
            qs_rank: band,
            normalization,
            seed: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Scalar (`m = 1`) problem; handy for hand-checkable cases.
    pub fn scalar(am1: f64, a0: f64, a1: f64) -> Result<Self> {
        let s = |x: f64| DenseMatrix::from_fn(1, 1, |_, _| x);
        QbdProblem::new(s(am1), s(a0), s(a1), Some(0), Normalization::Stochastic)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.am1.rows();
        for (name, b) in [("A-1", &self.am1), ("A0", &self.a0), ("A1", &self.a1)] {
            if b.shape() != (m, m) {
                return Err(Error::InvalidProblem(format!(
                    "{name} is {}x{}, expected {m}x{m}",
                    b.rows(),
                    b.cols()
                )));
            }
            if b.min_entry() < 0.0 {
                return Err(Error::InvalidProblem(format!("{name} has a negative entry {}", b.min_entry())));
            }
            if b.half_bandwidth() > self.band {
                return Err(Error::InvalidProblem(format!(
                    "{name} has half-bandwidth {} but band {} was declared",
                    b.half_bandwidth(),
                    self.band
                )));
            }
        }
        if m == 0 {
            return Err(Error::InvalidProblem("empty blocks".into()));
        }
        if self.qs_rank > self.band {
            return Err(Error::InvalidProblem(format!(
                "declared quasiseparable rank {} exceeds the band {}",
                self.qs_rank, self.band
            )));
        }
        let sums = self.sum().row_sums();
        for (i, s) in sums.iter().enumerate() {
            let ok = match self.normalization {
                Normalization::Stochastic => (s - 1.0).abs() <= STOCHASTIC_TOL,
                Normalization::IdentityAbsorbed => *s <= 1.0 + STOCHASTIC_TOL,
            };
            if !ok {
                return Err(Error::InvalidProblem(format!(
                    "row {i} of A-1 + A0 + A1 sums to {s:.17}"
                )));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.am1.rows()
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn qs_rank(&self) -> usize {
        self.qs_rank
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn am1(&self) -> &DenseMatrix {
        &self.am1
    }

    pub fn a0(&self) -> &DenseMatrix {
        &self.a0
    }

    pub fn a1(&self) -> &DenseMatrix {
        &self.a1
    }

    /// `A₋₁ + A₀ + A₁`.
    pub fn sum(&self) -> DenseMatrix {
        &(&self.am1 + &self.a0) + &self.a1
    }

    /// `max_i ‖A_i‖₂`.
    pub fn norm_bound(&self) -> f64 {
        [&self.am1, &self.a0, &self.a1]
            .iter()
            .map(|b| b.norm2())
            .fold(0.0, f64::max)
    }

    /// Mean level drift `π(A₁ − A₋₁)𝟙` under the stationary vector `π` of
    /// `A₋₁ + A₀ + A₁`: negative for positive recurrent chains, zero for null
    /// recurrent ones, positive for transient ones. `None` unless the blocks
    /// sum to a stochastic matrix.
    pub fn drift(&self) -> Option<f64> {
        if self.normalization != Normalization::Stochastic {
            return None;
        }
        let m = self.size();
        let a = self.sum();
        // πᵀ solves (A − I)ᵀ πᵀ = 0 with the last equation replaced by Σπ = 1.
        let lhs = DenseMatrix::from_fn(m, m, |i, j| {
            if i == m - 1 {
                1.0
            } else {
                a.get(j, i) - if i == j { 1.0 } else { 0.0 }
            }
        });
        let rhs = DenseMatrix::from_fn(m, 1, |i, _| if i == m - 1 { 1.0 } else { 0.0 });
        let pi = lhs.solve(&rhs).ok()?;
        let (up, down) = (self.a1.row_sums(), self.am1.row_sums());
        Some((0..m).map(|i| pi.get(i, 0) * (up[i] - down[i])).sum())
    }

    pub fn descriptor(&self) -> ProblemDescriptor {
        ProblemDescriptor {
            schema_version: 1,
            m: self.size(),
            band: self.band,
            qs_rank: self.qs_rank,
            seed: self.seed,
            normalization: self.normalization,
        }
    }

    /// Writes `Am1.mtx`, `A0.mtx`, `A1.mtx` and `problem.json` under `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, comments: &[String]) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        mm::write(dir.join("Am1.mtx"), &self.am1, comments)?;
        mm::write(dir.join("A0.mtx"), &self.a0, comments)?;
        mm::write(dir.join("A1.mtx"), &self.a1, comments)?;
        let path = dir.join("problem.json");
        let text = serde_json::to_string_pretty(&self.descriptor()).map_err(|e| Error::Json {
            path: path.clone(),
            source: e,
        })?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Reads a problem directory written by [`QbdProblem::save`]. A missing
    /// `problem.json` is allowed; the band is then inferred.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let am1 = mm::read(dir.join("Am1.mtx"))?;
        let a0 = mm::read(dir.join("A0.mtx"))?;
        let a1 = mm::read(dir.join("A1.mtx"))?;
        let path = dir.join("problem.json");
        let desc: Option<ProblemDescriptor> = match fs::read_to_string(&path) {
            Ok(text) => Some(serde_json::from_str(&text).map_err(|e| Error::Json {
                path: path.clone(),
                source: e,
            })?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(Error::io(&path, e)),
        };
        let Some(desc) = desc else {
            return QbdProblem::new(am1, a0, a1, None, Normalization::Stochastic);
        };
        if desc.m != am1.rows() {
            return Err(Error::InvalidProblem(format!(
                "problem.json declares m = {} but the blocks are {}x{}",
                desc.m,
                am1.rows(),
                am1.cols()
            )));
        }
        let p = QbdProblem {
            am1,
            a0,
            a1,
            band: desc.band,
            qs_rank: desc.qs_rank,
            normalization: desc.normalization,
            seed: desc.seed,
        };
        p.validate()?;
        Ok(p)
    }
}

impl LaurentBlocks for QbdProblem {
    fn blocks(&self) -> [Cow<'_, DenseMatrix>; 3] {
        [Cow::Borrowed(&self.am1), Cow::Borrowed(&self.a0), Cow::Borrowed(&self.a1)]
    }
}

impl LaurentBlocks for (DenseMatrix, DenseMatrix, DenseMatrix) {
    fn blocks(&self) -> [Cow<'_, DenseMatrix>; 3] {
        [Cow::Borrowed(&self.0), Cow::Borrowed(&self.1), Cow::Borrowed(&self.2)]
    }
}

/// JSON sidecar of a saved problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    pub schema_version: u32,
    pub m: usize,
    pub band: usize,
    pub qs_rank: usize,
    pub seed: Option<u64>,
    pub normalization: Normalization,
}

/// Random banded instance: entries within the band are uniform on `[0, 1)`,
/// then all three blocks share one row scaling that makes the sum
/// stochastic.
pub fn random_qbd(m: usize, band: usize, seed: u64) -> Result<QbdProblem> {
    random_qbd_with(m, band, seed, Normalization::Stochastic)
}

pub fn random_qbd_with(m: usize, band: usize, seed: u64, normalization: Normalization) -> Result<QbdProblem> {
    if m < 2 || band < 1 || band >= m {
        return Err(Error::InvalidArgument(format!(
            "random_qbd needs m >= 2 and 1 <= band < m, got m = {m}, band = {band}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = [DenseMatrix::zeros(m, m), DenseMatrix::zeros(m, m), DenseMatrix::zeros(m, m)];
    for b in raw.iter_mut() {
        for i in 0..m {
            let lo = i.saturating_sub(band);
            let hi = (i + band).min(m - 1);
            for j in lo..=hi {
                b.set(i, j, rng.random::<f64>());
            }
        }
    }
    let sums: Vec<f64> = (0..m)
        .map(|i| raw.iter().map(|b| (0..m).map(|j| b.get(i, j)).sum::<f64>()).sum())
        .collect();
    let scale: Vec<f64> = match normalization {
        Normalization::Stochastic => sums.iter().map(|s| 1.0 / s).collect(),
        Normalization::IdentityAbsorbed => sums.iter().map(|s| 1.0 / (s + 1.0)).collect(),
    };
    let [am1, a0, a1] = raw.map(|b| DenseMatrix::from_fn(m, m, |i, j| b.get(i, j) * scale[i]));
    let p = QbdProblem {
        am1,
        a0,
        a1,
        band,
        qs_rank: band,
        normalization,
        seed: Some(seed),
    };
    p.validate()?;
    Ok(p)
}
