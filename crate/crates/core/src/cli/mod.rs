//! The `qbdcr` command line: `solve`, `bench`, `decay` and `verify`.
//!
//! Every file written by a subcommand carries the [`RunConfig`] it was
//! produced with: JSON reports in a `run_config` field, CSV files in a
//! leading `# run_config=<json>` line, Matrix Market files in a `%` comment.

mod bench;
mod decay;
mod solve;
mod verify;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::OffDiagonalSplit;
use crate::qbd::Normalization;

#[derive(Debug, Parser)]
#[command(name = "qbdcr", version, about = "Cyclic reduction for QBD matrix equations with dense or hierarchical arithmetic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the minimal solution G and write G.mtx and report.json.
    ///
    /// Exit status: 0 converged, 2 iteration limit reached, 1 error.
    Solve(SolveArgs),
    /// Time CR over a grid of sizes, bands, backends and tolerances (CSV).
    Bench(BenchArgs),
    /// Record off-diagonal singular values across CR steps with bound curves.
    Decay(DecayArgs),
    /// Run the randomized inequality oracles and the functional identity check.
    ///
    /// Exit status: 0 when every suite passes, 1 otherwise.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Dense,
    Hodlr,
}

impl BackendKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackendKind::Dense => "dense",
            BackendKind::Hodlr => "hodlr",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    /// A₋₁ + A₀ + A₁ is stochastic.
    Stochastic,
    /// Each raw row is divided by its sum plus one, so the blocks plus I are stochastic.
    Absorbed,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::Stochastic => Normalization::Stochastic,
            NormalizationArg::Absorbed => Normalization::IdentityAbsorbed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BlockArg {
    Am1,
    A0,
    A1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GridPreset {
    /// Sizes 100..12800 with tridiagonal blocks.
    Table1,
    /// Size 1600 with bands 2..128.
    Table2,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Directory with Am1.mtx, A0.mtx, A1.mtx and optionally problem.json.
    #[arg(long, conflicts_with_all = ["size", "band", "seed", "normalization"])]
    pub input: Option<PathBuf>,
    /// Block size of a random instance.
    #[arg(long, required_unless_present = "input")]
    pub size: Option<usize>,
    /// Half-bandwidth of a random instance.
    #[arg(long, default_value_t = 1)]
    pub band: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Stochastic)]
    pub normalization: NormalizationArg,
    #[arg(long, value_enum, default_value_t = BackendKind::Dense)]
    pub backend: BackendKind,
    /// Truncation threshold of the hodlr backend.
    #[arg(long, default_value_t = 1e-14)]
    pub tol: f64,
    /// Leaf size of the hodlr backend.
    #[arg(long, default_value_t = 64)]
    pub leaf_size: usize,
    /// Iteration limit.
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Stop once min(‖A₁‖∞, ‖A₋₁‖∞) falls below this; default 1e-14·m.
    #[arg(long)]
    pub stop_tol: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Preset grid; explicit lists below override its axes.
    #[arg(long, value_enum)]
    pub grid: Option<GridPreset>,
    /// Block sizes [default: 100,200,400,800].
    #[arg(long, value_delimiter = ',')]
    pub size: Option<Vec<usize>>,
    /// Half-bandwidths [default: 1].
    #[arg(long, value_delimiter = ',')]
    pub band: Option<Vec<usize>>,
    /// Backends [default: dense,hodlr].
    #[arg(long, value_enum, value_delimiter = ',')]
    pub backend: Option<Vec<BackendKind>>,
    /// Hodlr truncation thresholds [default: 1e-16,1e-12,1e-8].
    #[arg(long, value_delimiter = ',')]
    pub tol: Option<Vec<f64>>,
    /// CR steps per run; the stopping test is disabled.
    #[arg(long, default_value_t = 15)]
    pub iters: usize,
    /// Timed runs per cell; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Absorbed)]
    pub normalization: NormalizationArg,
    #[arg(long, default_value_t = 64)]
    pub leaf_size: usize,
    /// Output CSV file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[arg(long, default_value_t = 400)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub band: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Absorbed)]
    pub normalization: NormalizationArg,
    /// Number of CR steps.
    #[arg(long, default_value_t = 20)]
    pub iters: usize,
    #[arg(long, value_enum, default_value_t = BackendKind::Dense)]
    pub backend: BackendKind,
    #[arg(long, default_value_t = 1e-14)]
    pub tol: f64,
    #[arg(long, default_value_t = 64)]
    pub leaf_size: usize,
    /// Probed block: `sw:ROW,COL` (rows ROW.., columns ..COL) or
    /// `ne:ROW,COL` (rows ..ROW, columns COL..); default sw:m/2,m/2.
    #[arg(long, value_parser = parse_split)]
    pub split: Option<OffDiagonalSplit>,
    /// CR coefficient to probe.
    #[arg(long, value_enum, default_value_t = BlockArg::A0)]
    pub block: BlockArg,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random instances per inequality.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Report file.
    #[arg(long, default_value = "verify.json")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Tighten one bound so that the suite must fail.
    #[arg(long, hide = true)]
    pub corrupt_oracle: bool,
}

fn parse_split(s: &str) -> std::result::Result<OffDiagonalSplit, String> {
    let (kind, rest) = s.split_once(':').ok_or("expected sw:ROW,COL or ne:ROW,COL")?;
    let (a, b) = rest.split_once(',').ok_or("expected two comma-separated indices")?;
    let a: usize = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    match kind {
        "sw" => Ok(OffDiagonalSplit::SouthWest { row_start: a, col_end: b }),
        "ne" => Ok(OffDiagonalSplit::NorthEast { row_end: a, col_start: b }),
        _ => Err(format!("unknown split kind {kind:?}")),
    }
}

/// Resolved parameters of one invocation. Fields that a subcommand does not
/// use are left empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub subcommand: String,
    pub sizes: Vec<usize>,
    pub bands: Vec<usize>,
    pub seed: u64,
    pub normalization: Option<Normalization>,
    pub backends: Vec<BackendKind>,
    pub tols: Vec<f64>,
    pub leaf_size: Option<usize>,
    pub iterations: usize,
    pub stop_tol: Option<f64>,
    pub runs: Option<usize>,
    pub trials: Option<usize>,
    pub split: Option<OffDiagonalSplit>,
    pub block: Option<String>,
    pub input: Option<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub threads: usize,
    pub version: String,
}

impl RunConfig {
    fn new(subcommand: &str, threads: usize) -> Self {
        RunConfig {
            schema_version: 1,
            subcommand: subcommand.to_string(),
            threads,
            version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.threads == 0 {
            return bad("--threads must be at least 1".into());
        }
        if self.input.is_none() && matches!(self.subcommand.as_str(), "solve" | "bench" | "decay") {
            if self.sizes.is_empty() || self.bands.is_empty() {
                return bad("the size and band lists must be nonempty".into());
            }
            for &m in &self.sizes {
                for &b in &self.bands {
                    if m < 2 || b < 1 || b >= m {
                        return bad(format!("need m >= 2 and 1 <= band < m, got m = {m}, band = {b}"));
                    }
                }
            }
        }
        if self.subcommand == "bench" && self.backends.is_empty() {
            return bad("the backend list must be nonempty".into());
        }
        for &t in &self.tols {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("tolerance must be finite and >= 0, got {t}"));
            }
        }
        if let Some(t) = self.stop_tol {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("--stop-tol must be finite and >= 0, got {t}"));
            }
        }
        if let Some(l) = self.leaf_size {
            if l < 2 {
                return bad(format!("--leaf-size must be >= 2, got {l}"));
            }
        }
        if self.runs == Some(0) {
            return bad("--runs must be at least 1".into());
        }
        if self.trials == Some(0) {
            return bad("--trials must be at least 1".into());
        }
        if self.subcommand == "decay" && self.iterations == 0 {
            return bad("--iters must be at least 1 for decay".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("RunConfig serializes")
    }
}

/// One-line diagnostic whose prefix names the failure category.
pub fn describe_error(e: &Error) -> String {
    match e {
        Error::Io { .. } => format!("I/O error: {e}"),
        Error::Parse { .. } | Error::Json { .. } => format!("parse error: {e}"),
        Error::Csv(_) => format!("CSV error: {e}"),
        Error::Singular { .. } => format!("singular: {e}"),
        Error::InvalidProblem(_) => format!("input error: {e}"),
        _ => format!("error: {e}"),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => solve::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Decay(a) => decay::run(a),
        Command::Verify(a) => verify::run(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("qbdcr: {}", describe_error(&e));
            ExitCode::from(1)
        }
    }
}

pub fn main() -> ExitCode {
    run(std::env::args_os())
}

fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_syntax() {
        assert_eq!(
            parse_split("sw:8,4").unwrap(),
            OffDiagonalSplit::SouthWest { row_start: 8, col_end: 4 }
        );
        assert_eq!(
            parse_split("ne:3,5").unwrap(),
            OffDiagonalSplit::NorthEast { row_end: 3, col_start: 5 }
        );
        assert!(parse_split("xx:1,2").is_err());
        assert!(parse_split("sw:1").is_err());
    }

    #[test]
    fn config_rejects_band_outside_block() {
        let mut c = RunConfig::new("solve", 1);
        c.sizes = vec![10];
        c.bands = vec![10];
        assert!(c.validate().is_err());
        c.bands = vec![3];
        assert!(c.validate().is_ok());
        c.threads = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
