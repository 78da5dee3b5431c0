use std::fs::File;
use std::io::{BufWriter, Write};

use serde::Serialize;

use super::{create_dir, write_json, BackendKind, BlockArg, DecayArgs, RunConfig};
use crate::analysis::{
    check_profile_against_bounds, decay_bound, decay_profile_with, estimate_delta, gnuplot_script, BoundCheck,
    DecayBound, DecayProfile, DeltaEstimate, ProbedBlock,
};
use crate::cr::{DenseBackend, HodlrBackend};
use crate::error::{Error, Result};
use crate::hodlr::ArithmeticConfig;
use crate::linalg::OffDiagonalSplit;
use crate::qbd::{random_qbd_with, spectral_annulus, QbdProblem, RecurrenceClass, SpectralInfo};

#[derive(Serialize)]
struct BoundsOutput<'a> {
    schema_version: u32,
    run_config: &'a RunConfig,
    class: RecurrenceClass,
    t: f64,
    theta: f64,
    l: f64,
    delta: Option<&'a DeltaEstimate>,
    bounds: &'a [DecayBound],
    check: Option<BoundCheck>,
    threshold_ranks: Vec<usize>,
    warnings: &'a [String],
}

fn bounds_for(si: &SpectralInfo, p: &QbdProblem, profile: &DecayProfile) -> Result<(DeltaEstimate, Vec<DecayBound>)> {
    if !(si.t > 1.0) {
        return Err(Error::BoundUndefined { t: si.t });
    }
    let delta = estimate_delta(si, p)?;
    let bounds = (0..=profile.steps)
        .map(|h| decay_bound(si, p, h, &delta, profile.l_max()))
        .collect::<Result<Vec<_>>>()?;
    Ok((delta, bounds))
}

fn plotted_steps(steps: usize) -> Vec<usize> {
    let mut v: Vec<usize> = std::iter::once(0)
        .chain((0..).map(|k| 1usize << k).take_while(|&h| h < steps))
        .collect();
    v.push(steps);
    v
}

fn create(path: &std::path::Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub(super) fn run(a: DecayArgs) -> Result<u8> {
    crate::set_threads(a.threads);
    let split = a.split.unwrap_or_else(|| OffDiagonalSplit::largest_south_west(a.size));
    let block = match a.block {
        BlockArg::Am1 => ProbedBlock::Am1,
        BlockArg::A0 => ProbedBlock::A0,
        BlockArg::A1 => ProbedBlock::A1,
    };
    let names = ["decay.csv", "ranks.csv", "bounds.json", "decay.gp"];
    let mut cfg = RunConfig::new("decay", a.threads);
    cfg.sizes = vec![a.size];
    cfg.bands = vec![a.band];
    cfg.seed = a.seed;
    cfg.normalization = Some(a.normalization.into());
    cfg.backends = vec![a.backend];
    cfg.tols = if a.backend == BackendKind::Hodlr { vec![a.tol] } else { Vec::new() };
    cfg.leaf_size = (a.backend == BackendKind::Hodlr).then_some(a.leaf_size);
    cfg.iterations = a.iters;
    cfg.split = Some(split);
    cfg.block = Some(format!("{block:?}").to_lowercase());
    cfg.outputs = names.iter().map(|n| a.out.join(n)).collect();
    cfg.validate()?;
    split.block(a.size, a.size)?;

    let p = random_qbd_with(a.size, a.band, a.seed, a.normalization.into())?;
    let si = spectral_annulus(&p)?;
    let theta = Some(si.theta);
    let profile = match a.backend {
        BackendKind::Dense => decay_profile_with(&p, a.iters, split, &DenseBackend, block, theta)?,
        BackendKind::Hodlr => {
            let hcfg = ArithmeticConfig {
                tol: a.tol,
                leaf_size: a.leaf_size,
                max_rank: None,
            };
            hcfg.validate()?;
            decay_profile_with(&p, a.iters, split, &HodlrBackend::new(hcfg), block, theta)?
        }
    };

    let mut warnings = Vec::new();
    let (delta, bounds) = match bounds_for(&si, &p, &profile) {
        Ok((d, b)) => (Some(d), b),
        Err(e) => {
            warnings.push(format!("bound curves omitted: {e}"));
            (None, Vec::new())
        }
    };
    for w in &warnings {
        eprintln!("qbdcr: warning: {w}");
    }
    let check = (!bounds.is_empty()).then(|| check_profile_against_bounds(&profile, &bounds));
    let ranks = profile.threshold_ranks(f64::EPSILON);

    create_dir(&a.out)?;
    let header = format!("# run_config={}\n", cfg.to_json());
    let io = |e| Error::io(&a.out, e);

    let mut f = create(&cfg.outputs[0])?;
    f.write_all(header.as_bytes()).map_err(io)?;
    profile.write_csv(&mut f, &bounds)?;
    f.flush().map_err(io)?;

    let mut f = create(&cfg.outputs[1])?;
    f.write_all(header.as_bytes()).map_err(io)?;
    {
        let mut w = csv::Writer::from_writer(&mut f);
        w.write_record(["h", "rank_above_eps", "sigma_1", "norm2_max", "bound_1"])?;
        for (h, sig) in profile.sigma.iter().enumerate() {
            let b1 = bounds.get(h).map(|b| format!("{:e}", b.applicable(1))).unwrap_or_default();
            w.write_record([
                h.to_string(),
                ranks[h].to_string(),
                format!("{:e}", sig.first().copied().unwrap_or(0.0)),
                format!("{:e}", profile.norm_per_step[h]),
                b1,
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
    }
    f.flush().map_err(io)?;

    write_json(
        &cfg.outputs[2],
        &BoundsOutput {
            schema_version: 1,
            run_config: &cfg,
            class: si.class,
            t: si.t,
            theta: si.theta,
            l: profile.l_max(),
            delta: delta.as_ref(),
            bounds: &bounds,
            check: check.clone(),
            threshold_ranks: ranks.clone(),
            warnings: &warnings,
        },
    )?;

    let title = format!("m = {}, band = {}, seed = {}", a.size, a.band, a.seed);
    let script = header + &gnuplot_script("decay.csv", &plotted_steps(a.iters), &title);
    std::fs::write(&cfg.outputs[3], script).map_err(|e| Error::io(&cfg.outputs[3], e))?;

    println!(
        "class {:?}, t = {:.6}, theta = {:.6}; max rank above eps over {} steps: {}",
        si.class,
        si.t,
        si.theta,
        a.iters,
        ranks.iter().max().copied().unwrap_or(0)
    );
    if let Some(c) = &check {
        println!(
            "{} of {} singular values exceed the bound (max ratio {:.3e})",
            c.violations, c.checked, c.max_ratio
        );
    }
    Ok(0)
}
