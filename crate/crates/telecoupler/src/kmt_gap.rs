//! Growth of the maximal partial-sum gap between a Laplace walk and its
//! Gaussian partner, in quantile and dyadic mode.

use serde::{Deserialize, Serialize};
use telecoupler_core::couplings::{couple_increments, max_partial_sum_gap, KmtMode};
use telecoupler_core::stats::{median, ols, LinearFit, Moments};
use telecoupler_core::transport::replicate;

use crate::checks::{stream_block, CheckResult};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// Exponent the dyadic median gap must stay below.
pub const SUBLINEAR_EXPONENT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n: usize,
    pub quantile_median_gap: f64,
    pub dyadic_median_gap: f64,
    pub quantile_mean_gap: f64,
    pub dyadic_mean_gap: f64,
    pub replicates: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapOutcome {
    pub rows: Vec<GapRow>,
    pub quantile_fit: LinearFit,
    pub dyadic_fit: LinearFit,
    pub checks: Vec<CheckResult>,
}

/// Both modes see the same Laplace(1) increments in every replicate.
pub fn gap_row(seed: u64, index: u64, n: usize, replicates: u64) -> Result<GapRow> {
    let gaps = replicate(seed, stream_block(300 + index), replicates, |_, rng| {
        let xi: Vec<f64> = (0..n).map(|_| rng.exp1() - rng.exp1()).collect();
        let q = couple_increments(&xi, KmtMode::Quantile)?;
        let d = couple_increments(&xi, KmtMode::Dyadic)?;
        Ok((max_partial_sum_gap(&xi, &q), max_partial_sum_gap(&xi, &d)))
    })?;
    let (mut q, mut d): (Vec<f64>, Vec<f64>) = gaps.into_iter().unzip();
    let quantile_mean_gap = q.iter().copied().collect::<Moments>().mean();
    let dyadic_mean_gap = d.iter().copied().collect::<Moments>().mean();
    Ok(GapRow {
        n,
        quantile_median_gap: median(&mut q),
        dyadic_median_gap: median(&mut d),
        quantile_mean_gap,
        dyadic_mean_gap,
        replicates,
    })
}

pub fn gap_checks(quantile: &LinearFit, dyadic: &LinearFit) -> Vec<CheckResult> {
    vec![
        CheckResult::below(
            "kmt-dyadic-exponent",
            "fitted exponent of the dyadic median gap < 0.5",
            dyadic.slope,
            SUBLINEAR_EXPONENT,
        ),
        CheckResult::below(
            "kmt-dyadic-vs-quantile",
            "dyadic exponent < quantile exponent",
            dyadic.slope,
            quantile.slope,
        ),
    ]
}

pub fn run_kmt_gap_sizes(seed: u64, sizes: &[usize], replicates: u64) -> Result<GapOutcome> {
    let mut rows = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let row = gap_row(seed, i as u64, n, replicates)?;
        log::info!(
            "n={n} quantile={:.4} dyadic={:.4}",
            row.quantile_median_gap,
            row.dyadic_median_gap
        );
        rows.push(row);
    }
    let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let fit = |f: fn(&GapRow) -> f64| {
        let y: Vec<f64> = rows.iter().map(|r| f(r).ln()).collect();
        ols(&x, &y).ok_or_else(|| HarnessError::ExperimentFailure("gap fit needs two distinct sizes".into()))
    };
    let quantile_fit = fit(|r| r.quantile_median_gap)?;
    let dyadic_fit = fit(|r| r.dyadic_median_gap)?;
    let checks = gap_checks(&quantile_fit, &dyadic_fit);
    Ok(GapOutcome {
        rows,
        quantile_fit,
        dyadic_fit,
        checks,
    })
}

pub fn run_kmt_gap(cfg: &ExperimentConfig) -> Result<GapOutcome> {
    run_kmt_gap_sizes(cfg.seed, &cfg.kmt_sizes, cfg.replicates)
}
