//! Convergence sweep along `T★/L★² = ζ`: W₂ brackets per point and the
//! log-log slope of the chain estimate.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use telecoupler_core::bounds::{crude_and_exact_independent, main_bound_rhs};
use telecoupler_core::couplings::{chain_pair, independent_pair};
use telecoupler_core::stats::{ols, LinearFit};
use telecoupler_core::transport::{marginal_w2_lower, replicate, uniform_grid, w2_from_costs, EstimateWithCI, Z95};
use telecoupler_core::ScalingParams;

use crate::checks::{stream_block, CheckResult, SE_MULTIPLIER};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// Grid for the marginal lower estimate.
pub const LOWER_GRID_POINTS: usize = 257;
/// Accepted slope range of the chain estimate.
pub const SLOPE_RANGE: (f64, f64) = (-0.35, -0.15);
/// The chain estimate at the largest `T★` must be below this fraction of the
/// independent one.
pub const CHAIN_RATIO: f64 = 0.25;
/// The smallest `T★` leaves the slope fit if its half-width exceeds this
/// fraction of its point estimate.
pub const NOISY_POINT_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T_star")]
    pub t_star: f64,
    #[serde(rename = "L_star")]
    pub l_star: f64,
    pub w2_upper_coinflip_chain: EstimateWithCI,
    pub w2_upper_independent: EstimateWithCI,
    pub w2_lower: EstimateWithCI,
    pub main_rhs: f64,
    pub crude_rhs: f64,
    /// Wall-clock time of the row; kept out of the report so that reports
    /// stay byte-identical across runs.
    #[serde(skip)]
    pub runtime_seconds: f64,
}

impl SweepRow {
    fn is_finite(&self) -> bool {
        [
            &self.w2_upper_coinflip_chain,
            &self.w2_upper_independent,
            &self.w2_lower,
        ]
        .iter()
        .all(|e| e.point.is_finite() && e.half_width_95.is_finite())
            && self.main_rhs.is_finite()
            && self.crude_rhs.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    #[serde(flatten)]
    pub fit: LinearFit,
    #[serde(rename = "T_stars_used")]
    pub t_stars_used: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub slope: Option<SlopeFit>,
    pub checks: Vec<CheckResult>,
}

/// Chain and independent upper estimates plus the marginal lower estimate at
/// one point. The lower estimate reuses the chain samples, whose two
/// coordinates have the exact marginal laws.
pub fn sweep_point(seed: u64, index: u64, params: &ScalingParams, replicates: u64, c: f64) -> Result<SweepRow> {
    let start = Instant::now();
    let grid = uniform_grid(params.horizon, LOWER_GRID_POINTS);
    let chain = replicate(seed, stream_block(200 + 2 * index), replicates, |_, rng| {
        let p = chain_pair(rng, params)?;
        Ok((p.cost()?, p.left.eval_sorted(&grid), p.right.eval_sorted(&grid)))
    })?;
    let costs: Vec<f64> = chain.iter().map(|c| c.0).collect();
    let w2_upper_coinflip_chain = w2_from_costs(&costs)?;
    let (a, b): (Vec<Vec<f64>>, Vec<Vec<f64>>) = chain.into_iter().map(|c| (c.1, c.2)).unzip();
    let w2_lower = marginal_w2_lower(&a, &b, &grid)?;
    drop((a, b));
    let ind = replicate(seed, stream_block(201 + 2 * index), replicates, |_, rng| {
        independent_pair(rng, params)?.cost()
    })?;
    let w2_upper_independent = w2_from_costs(&ind)?;
    let (t, l) = (params.t_star(), params.l_star());
    Ok(SweepRow {
        t_star: t,
        l_star: l,
        w2_upper_coinflip_chain,
        w2_upper_independent,
        w2_lower,
        main_rhs: main_bound_rhs(t, l, c)?,
        crude_rhs: crude_and_exact_independent(t, l)?.0,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// OLS of `ln(chain estimate)` on `ln T★`. The smallest `T★` is left out when
/// its interval is wider than [`NOISY_POINT_FRACTION`] of its estimate.
pub fn fit_slope(rows: &[SweepRow]) -> Option<SlopeFit> {
    let skip = rows
        .first()
        .map(|r| r.w2_upper_coinflip_chain.half_width_95 > NOISY_POINT_FRACTION * r.w2_upper_coinflip_chain.point)
        .unwrap_or(false);
    let used = &rows[skip as usize..];
    let x: Vec<f64> = used.iter().map(|r| r.t_star.ln()).collect();
    let y: Vec<f64> = used.iter().map(|r| r.w2_upper_coinflip_chain.point.ln()).collect();
    Some(SlopeFit {
        fit: ols(&x, &y)?,
        t_stars_used: used.iter().map(|r| r.t_star).collect(),
    })
}

/// Per-row sandwich and oracle checks, then slope and ratio checks.
pub fn sweep_checks(rows: &[SweepRow], slope: Option<&SlopeFit>) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for r in rows {
        let t = r.t_star;
        let (lo, ch, ind) = (&r.w2_lower, &r.w2_upper_coinflip_chain, &r.w2_upper_independent);
        out.push(CheckResult::at_most(
            format!("sandwich-lower T*={t}"),
            "lower estimate <= chain estimate + combined 95% half-widths",
            lo.point,
            ch.point + lo.half_width_95 + ch.half_width_95,
        ));
        out.push(CheckResult::at_most(
            format!("sandwich-upper T*={t}"),
            "chain estimate <= independent estimate + combined 95% half-widths",
            ch.point,
            ind.point + ch.half_width_95 + ind.half_width_95,
        ));
        out.push(CheckResult::z_test(
            format!("independent-oracle T*={t}"),
            "independent estimate = closed-form independent cost",
            ind.point,
            r.crude_rhs,
            ind.half_width_95 / Z95,
            SE_MULTIPLIER,
        ));
    }
    match slope {
        Some(s) => {
            out.push(CheckResult::at_most(
                "chain-slope-upper",
                "fitted log-log slope of the chain estimate <= -0.15",
                s.fit.slope,
                SLOPE_RANGE.1,
            ));
            out.push(CheckResult::at_most(
                "chain-slope-lower",
                "negated fitted log-log slope of the chain estimate <= 0.35",
                -s.fit.slope,
                -SLOPE_RANGE.0,
            ));
        }
        None => out.push(CheckResult::at_most(
            "chain-slope",
            "slope fit needs two usable points",
            f64::NAN,
            0.0,
        )),
    }
    if let Some(last) = rows.last() {
        out.push(CheckResult::below(
            format!("chain-vs-independent T*={}", last.t_star),
            "chain estimate < 0.25 x independent estimate at the largest T*",
            last.w2_upper_coinflip_chain.point,
            CHAIN_RATIO * last.w2_upper_independent.point,
        ));
    }
    out
}

pub fn run_convergence_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let mut rows = Vec::new();
    for (i, params) in cfg.sweep.params()?.iter().enumerate() {
        let row = sweep_point(cfg.seed, i as u64, params, cfg.replicates, cfg.constants.c)?;
        log::info!(
            "T*={} chain={:.5} independent={:.5} lower={:.5} ({:.1}s)",
            row.t_star,
            row.w2_upper_coinflip_chain.point,
            row.w2_upper_independent.point,
            row.w2_lower.point,
            row.runtime_seconds
        );
        if !row.is_finite() {
            return Err(HarnessError::ExperimentFailure(format!(
                "non-finite estimate in row {row:?}"
            )));
        }
        rows.push(row);
    }
    let slope = fit_slope(&rows);
    let checks = sweep_checks(&rows, slope.as_ref());
    Ok(SweepOutcome { rows, slope, checks })
}
