use std::fs::File;
use std::io::Write;

use super::{BackendKind, BenchArgs, GridPreset, RunConfig};
use crate::cr::{cr_solve_g, DenseBackend, HodlrBackend, SolveReport, StopCriterion};
use crate::error::{Error, Result};
use crate::hodlr::ArithmeticConfig;
use crate::qbd::{random_qbd_with, QbdProblem};

const DEFAULT_SIZES: [usize; 4] = [100, 200, 400, 800];
const DEFAULT_TOLS: [f64; 3] = [1e-16, 1e-12, 1e-8];

/// One line of the bench table. `tol` is `None` for the dense backend.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub size: usize,
    pub band: usize,
    pub backend: BackendKind,
    pub tol: Option<f64>,
    pub outcome: std::result::Result<CellResult, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub iterations: usize,
    pub time_median: f64,
    pub time_min: f64,
    pub time_max: f64,
    pub residual: f64,
    pub max_rank: Option<usize>,
}

pub const HEADER: [&str; 13] = [
    "size",
    "band",
    "backend",
    "tol",
    "iterations",
    "runs",
    "time_seconds",
    "time_min",
    "time_max",
    "residual",
    "max_rank",
    "status",
    "error",
];

fn grid_axes(a: &BenchArgs) -> (Vec<usize>, Vec<usize>) {
    let (sizes, bands) = match a.grid {
        Some(GridPreset::Table1) => ((0..8).map(|k| 100 << k).collect(), vec![1]),
        Some(GridPreset::Table2) => (vec![1600], (1..=7).map(|k| 1 << k).collect()),
        None => (DEFAULT_SIZES.to_vec(), vec![1]),
    };
    (a.size.clone().unwrap_or(sizes), a.band.clone().unwrap_or(bands))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn time_cell(p: &QbdProblem, backend: BackendKind, tol: Option<f64>, a: &BenchArgs) -> Result<CellResult> {
    let stop = StopCriterion::fixed(a.iters);
    let mut times = Vec::with_capacity(a.runs);
    let mut last: Option<SolveReport> = None;
    for _ in 0..a.runs {
        let (_, r) = match backend {
            BackendKind::Dense => cr_solve_g(p, &DenseBackend, stop)?,
            BackendKind::Hodlr => {
                let cfg = ArithmeticConfig {
                    tol: tol.unwrap_or(0.0),
                    leaf_size: a.leaf_size,
                    max_rank: None,
                };
                cfg.validate()?;
                cr_solve_g(p, &HodlrBackend::new(cfg), stop)?
            }
        };
        times.push(r.time_seconds);
        last = Some(r);
    }
    let r = last.ok_or_else(|| Error::InvalidArgument("no runs".into()))?;
    let time_min = times.iter().copied().fold(f64::INFINITY, f64::min);
    let time_max = times.iter().copied().fold(0.0, f64::max);
    Ok(CellResult {
        iterations: r.iterations,
        time_median: median(&mut times),
        time_min,
        time_max,
        residual: r.residual,
        max_rank: r.max_rank_per_step.iter().flatten().copied().max(),
    })
}

/// Runs every cell of the grid. Failing cells keep their error message and
/// do not stop the run.
pub fn bench_rows(a: &BenchArgs, mut progress: impl FnMut(&BenchRow)) -> Vec<BenchRow> {
    let (sizes, bands) = grid_axes(a);
    let backends = a.backend.clone().unwrap_or_else(|| vec![BackendKind::Dense, BackendKind::Hodlr]);
    let tols = a.tol.clone().unwrap_or_else(|| DEFAULT_TOLS.to_vec());
    let mut rows = Vec::new();
    for &size in &sizes {
        for &band in &bands {
            let problem = random_qbd_with(size, band, a.seed, a.normalization.into());
            for &backend in &backends {
                let cell_tols: Vec<Option<f64>> = match backend {
                    BackendKind::Dense => vec![None],
                    BackendKind::Hodlr => tols.iter().map(|&t| Some(t)).collect(),
                };
                for tol in cell_tols {
                    let outcome = match &problem {
                        Ok(p) => time_cell(p, backend, tol, a).map_err(|e| super::describe_error(&e)),
                        Err(e) => Err(super::describe_error(e)),
                    };
                    let row = BenchRow {
                        size,
                        band,
                        backend,
                        tol,
                        outcome,
                    };
                    progress(&row);
                    rows.push(row);
                }
            }
        }
    }
    sort_rows(&mut rows);
    rows
}

/// Orders rows by `(size, band, backend, tol)` with the dense row first.
pub fn sort_rows(rows: &mut [BenchRow]) {
    rows.sort_by(|x, y| {
        (x.size, x.band, x.backend)
            .cmp(&(y.size, y.band, y.backend))
            .then_with(|| match (x.tol, y.tol) {
                (Some(a), Some(b)) => a.total_cmp(&b),
                (a, b) => a.is_some().cmp(&b.is_some()),
            })
    });
}

pub fn write_rows<W: Write>(mut out: W, cfg: &RunConfig, runs: usize, rows: &[BenchRow]) -> Result<()> {
    writeln!(out, "# run_config={}", cfg.to_json()).map_err(|e| Error::io("<bench output>", e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        let tol = r.tol.map(|t| format!("{t:e}")).unwrap_or_default();
        let mut rec = vec![r.size.to_string(), r.band.to_string(), r.backend.as_str().to_string(), tol];
        match &r.outcome {
            Ok(c) => rec.extend([
                c.iterations.to_string(),
                runs.to_string(),
                format!("{:e}", c.time_median),
                format!("{:e}", c.time_min),
                format!("{:e}", c.time_max),
                format!("{:e}", c.residual),
                c.max_rank.map(|k| k.to_string()).unwrap_or_default(),
                "ok".to_string(),
                String::new(),
            ]),
            Err(msg) => {
                rec.extend(std::iter::repeat_n(String::new(), 7));
                rec.extend(["error".to_string(), msg.clone()]);
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub(super) fn run(a: BenchArgs) -> Result<u8> {
    crate::set_threads(a.threads);
    let (sizes, bands) = grid_axes(&a);
    let mut cfg = RunConfig::new("bench", a.threads);
    cfg.sizes = sizes;
    cfg.bands = bands;
    cfg.seed = a.seed;
    cfg.normalization = Some(a.normalization.into());
    cfg.backends = a.backend.clone().unwrap_or_else(|| vec![BackendKind::Dense, BackendKind::Hodlr]);
    cfg.tols = a.tol.clone().unwrap_or_else(|| DEFAULT_TOLS.to_vec());
    cfg.leaf_size = Some(a.leaf_size);
    cfg.iterations = a.iters;
    cfg.runs = Some(a.runs);
    cfg.outputs = a.out.iter().cloned().collect();
    cfg.validate()?;

    let rows = bench_rows(&a, |r| match &r.outcome {
        Ok(c) => eprintln!(
            "m = {:5} band = {:3} {:5} tol = {:>8}  {:.3e} s  residual {:.2e}",
            r.size,
            r.band,
            r.backend.as_str(),
            r.tol.map(|t| format!("{t:.0e}")).unwrap_or_else(|| "-".into()),
            c.time_median,
            c.residual
        ),
        Err(msg) => eprintln!("m = {:5} band = {:3} {:5} failed: {msg}", r.size, r.band, r.backend.as_str()),
    });
    match &a.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| Error::io(path, e))?;
            write_rows(std::io::BufWriter::new(f), &cfg, a.runs, &rows)?;
        }
        None => write_rows(std::io::stdout().lock(), &cfg, a.runs, &rows)?,
    }
    Ok(if rows.iter().all(|r| r.outcome.is_ok()) { 0 } else { 1 })
}
