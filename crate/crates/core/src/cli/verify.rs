use serde::Serialize;

use super::{write_json, RunConfig, VerifyArgs};
use crate::analysis::{
    functional_identity_check, lemma_oracles_with, FunctionalIdentityReport, OracleOptions, PropertyReport,
    FUNCTIONAL_IDENTITY_TOL,
};
use crate::error::Result;

const IDENTITY_INSTANCES: usize = 5;
const IDENTITY_SIZE: usize = 30;
const IDENTITY_MAX_H: usize = 2;
const IDENTITY_POINTS: usize = 8;

#[derive(Serialize)]
struct VerifyOutput<'a> {
    schema_version: u32,
    run_config: &'a RunConfig,
    lemmas: &'a PropertyReport,
    functional_identity: &'a FunctionalIdentityReport,
    passed: bool,
}

pub(super) fn run(a: VerifyArgs) -> Result<u8> {
    crate::set_threads(a.threads);
    let mut cfg = RunConfig::new("verify", a.threads);
    cfg.seed = a.seed;
    cfg.trials = Some(a.trials);
    cfg.outputs = vec![a.out.clone()];
    cfg.validate()?;

    let lemmas = lemma_oracles_with(a.seed, a.trials, OracleOptions { corrupt: a.corrupt_oracle })?;
    let fi = functional_identity_check(a.seed, IDENTITY_INSTANCES, IDENTITY_SIZE, IDENTITY_MAX_H, IDENTITY_POINTS)?;
    let passed = lemmas.passed && fi.violations == 0;

    for o in &lemmas.outcomes {
        let status = match (o.passed, o.informational) {
            (_, true) => "INFO",
            (true, false) => "PASS",
            (false, false) => "FAIL",
        };
        println!(
            "{status} {:<38} checks {:>7}  violations {:>5}  max ratio {:.6}",
            o.name, o.checks, o.violations, o.max_ratio
        );
    }
    println!(
        "{} {:<38} checks {:>7}  violations {:>5}  max error {:.3e}",
        if fi.violations == 0 { "PASS" } else { "FAIL" },
        "functional_identity",
        fi.checks,
        fi.violations,
        fi.max_error
    );

    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        super::create_dir(parent)?;
    }
    write_json(
        &a.out,
        &VerifyOutput {
            schema_version: 1,
            run_config: &cfg,
            lemmas: &lemmas,
            functional_identity: &fi,
            passed,
        },
    )?;

    if passed {
        return Ok(0);
    }
    for o in lemmas.failures() {
        eprintln!(
            "qbdcr: {} failed: {} of {} checks violated ({}), worst trial {:?}, max ratio {:.6}",
            o.name, o.violations, o.checks, o.statement, o.worst_trial, o.max_ratio
        );
    }
    if fi.violations > 0 {
        eprintln!(
            "qbdcr: functional identity failed: {} of {} checks above {FUNCTIONAL_IDENTITY_TOL:e}, max error {:.3e}",
            fi.violations, fi.checks, fi.max_error
        );
    }
    Ok(1)
}
