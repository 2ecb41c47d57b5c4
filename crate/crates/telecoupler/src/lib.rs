//! Experiment runner for the telegraph-to-Brownian coupling library:
//! verification suites, coupling audits, convergence sweeps, the KMT gap
//! diagnostic and bound tables, each emitting a deterministic report.

pub mod checks;
pub mod config;
pub mod couplings;
pub mod error;
pub mod kmt_gap;
pub mod moments;
pub mod report;
pub mod sweep;

use std::path::PathBuf;
use std::time::Instant;

use telecoupler_core::bounds::BoundReport;

pub use checks::CheckResult;
pub use config::{Experiment, ExperimentConfig, Format, SweepSpec};
pub use error::{HarnessError, Result};
pub use report::Outcome;

pub struct RunSummary {
    pub outcome: Outcome,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
    pub written: Vec<PathBuf>,
    pub runtime_seconds: f64,
}

/// Computes an experiment without writing anything.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    Ok(match cfg.experiment {
        Experiment::VerifyMoments => Outcome::Checks(moments::run_verify_moments(cfg)?),
        Experiment::VerifyCouplings => Outcome::Checks(couplings::run_verify_couplings(cfg)?),
        Experiment::ConvergenceSweep => Outcome::Sweep(sweep::run_convergence_sweep(cfg)?),
        Experiment::KmtGap => Outcome::KmtGap(kmt_gap::run_kmt_gap(cfg)?),
        Experiment::BoundsTable => Outcome::Bounds(
            cfg.sweep
                .t_stars
                .iter()
                .map(|&t| BoundReport::evaluate(t, cfg.sweep.l_star(t), &cfg.constants))
                .collect::<std::result::Result<_, _>>()?,
        ),
    })
}

/// Runs an experiment and writes its report, sidecars and timing file. Failed
/// checks are reported through [`RunSummary::all_pass`], not as errors.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let start = Instant::now();
    let outcome = execute(cfg)?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    let mut written = report::write_report(cfg, &outcome)?;
    written.push(report::write_timing(cfg, &outcome, runtime_seconds)?);
    let checks = outcome.checks();
    Ok(RunSummary {
        all_pass: checks::all_pass(&checks),
        checks,
        outcome,
        written,
        runtime_seconds,
    })
}
