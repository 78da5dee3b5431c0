use serde::Serialize;

use super::{create_dir, describe_error, write_json, BackendKind, RunConfig, SolveArgs};
use crate::cr::{cr_solve_g, DenseBackend, HodlrBackend, SolveReport, StopCriterion, StopReason};
use crate::error::{Error, Result};
use crate::hodlr::ArithmeticConfig;
use crate::linalg::mm;
use crate::qbd::{random_qbd_with, QbdProblem};

#[derive(Serialize)]
struct SolveOutput<'a> {
    schema_version: u32,
    run_config: &'a RunConfig,
    #[serde(flatten)]
    report: &'a SolveReport,
    error: Option<String>,
}

pub(super) fn run(a: SolveArgs) -> Result<u8> {
    crate::set_threads(a.threads);
    let mut cfg = RunConfig::new("solve", a.threads);
    cfg.backends = vec![a.backend];
    cfg.leaf_size = (a.backend == BackendKind::Hodlr).then_some(a.leaf_size);
    cfg.tols = if a.backend == BackendKind::Hodlr { vec![a.tol] } else { Vec::new() };
    cfg.iterations = a.iters;
    cfg.outputs = vec![a.out.join("G.mtx"), a.out.join("report.json")];
    if let Some(dir) = &a.input {
        cfg.input = Some(dir.clone());
    } else {
        cfg.sizes = vec![a.size.unwrap_or(0)];
        cfg.bands = vec![a.band];
        cfg.seed = a.seed;
        cfg.normalization = Some(a.normalization.into());
    }
    cfg.validate()?;

    let p = match &a.input {
        Some(dir) => QbdProblem::load(dir)?,
        None => random_qbd_with(cfg.sizes[0], a.band, a.seed, a.normalization.into())?,
    };
    let stop = StopCriterion {
        tol: Some(a.stop_tol.unwrap_or(1e-14 * p.size() as f64)),
        max_iter: a.iters,
    };
    cfg.stop_tol = stop.tol;
    let hcfg = ArithmeticConfig {
        tol: a.tol,
        leaf_size: a.leaf_size,
        max_rank: None,
    };
    hcfg.validate()?;
    let solved = match a.backend {
        BackendKind::Dense => cr_solve_g(&p, &DenseBackend, stop),
        BackendKind::Hodlr => cr_solve_g(&p, &HodlrBackend::new(hcfg), stop),
    };

    create_dir(&a.out)?;
    let report_path = a.out.join("report.json");
    match solved {
        Ok((g, report)) => {
            mm::write(a.out.join("G.mtx"), &g, &[format!("run_config={}", cfg.to_json())])?;
            let out = SolveOutput {
                schema_version: 1,
                run_config: &cfg,
                report: &report,
                error: None,
            };
            write_json(&report_path, &out)?;
            for w in &report.warnings {
                eprintln!("qbdcr: warning: {w}");
            }
            println!(
                "{}: {} iterations, residual {:.3e}, {:.3} s",
                match report.stop_reason {
                    StopReason::Converged => "converged",
                    StopReason::MaxIter => "iteration limit reached",
                    StopReason::Singular => "singular",
                },
                report.iterations,
                report.residual,
                report.time_seconds
            );
            Ok(match report.stop_reason {
                StopReason::Converged => 0,
                _ => 2,
            })
        }
        Err(e @ Error::Singular { .. }) => {
            let report = SolveReport {
                schema_version: 1,
                size: p.size(),
                band: p.band(),
                backend: a.backend.as_str().to_string(),
                tol: (a.backend == BackendKind::Hodlr).then_some(a.tol),
                iterations: 0,
                residual: f64::NAN,
                time_seconds: 0.0,
                step_seconds: Vec::new(),
                g_seconds: 0.0,
                max_rank_per_step: Vec::new(),
                stop_reason: StopReason::Singular,
                stop_tol: stop.tol,
                max_iter: stop.max_iter,
                warnings: Vec::new(),
            };
            let out = SolveOutput {
                schema_version: 1,
                run_config: &cfg,
                report: &report,
                error: Some(describe_error(&e)),
            };
            write_json(&report_path, &out)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}
