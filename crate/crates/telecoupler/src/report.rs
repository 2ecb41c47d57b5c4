//! Report emission. The main report and its `.checks`/`.slope`/`.fit`
//! sidecars depend only on the configuration and seed; wall-clock timings go
//! to a separate `.timing.json` file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use telecoupler_core::bounds::{BoundReport, Constants};
use telecoupler_core::stats::LinearFit;

use crate::checks::CheckResult;
use crate::config::{ExperimentConfig, Format};
use crate::error::Result;
use crate::kmt_gap::GapOutcome;
use crate::sweep::SweepOutcome;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Checks(Vec<CheckResult>),
    Sweep(SweepOutcome),
    KmtGap(GapOutcome),
    Bounds(Vec<BoundReport>),
}

impl Outcome {
    pub fn checks(&self) -> Vec<CheckResult> {
        match self {
            Outcome::Checks(c) => c.clone(),
            Outcome::Sweep(s) => s.checks.clone(),
            Outcome::KmtGap(g) => g.checks.clone(),
            Outcome::Bounds(rows) => rows
                .iter()
                .map(|r| {
                    let worst = [r.main_rhs, r.crude_rhs, r.coinflip_rhs, r.synchronous_rhs, r.kmt_rhs]
                        .iter()
                        .all(|v| v.is_finite());
                    CheckResult::at_most(
                        format!("bounds-finite T*={}", r.t_star),
                        "every bound curve is finite",
                        if worst { 0.0 } else { 1.0 },
                        0.0,
                    )
                })
                .collect(),
        }
    }
}

/// Everything in the configuration that shapes the numbers.
#[derive(Clone, Debug, PartialEq, Serialize)]
struct Header<'a> {
    experiment: &'static str,
    zeta: f64,
    #[serde(rename = "T_stars")]
    t_stars: &'a [f64],
    replicates: u64,
    seed: u64,
    constants: Constants,
    kmt_sizes: &'a [usize],
}

#[derive(Serialize)]
struct JsonReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    result: &'a Outcome,
    checks: Vec<CheckResult>,
    all_pass: bool,
}

/// `dir/name.ext` → `dir/name.ext.<tag>.<kind>`.
pub fn sidecar(out: &Path, tag: &str, kind: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(format!(".{tag}.{kind}"));
    PathBuf::from(s)
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_checks_csv(path: &Path, checks: &[CheckResult]) -> Result<()> {
    write_table(
        path,
        &[
            "name",
            "identity",
            "estimate",
            "target",
            "statistic",
            "threshold",
            "pass",
        ],
        checks.iter().map(|c| {
            vec![
                c.name.clone(),
                c.identity.clone(),
                num(c.estimate),
                num(c.target),
                num(c.statistic),
                num(c.threshold),
                c.pass.to_string(),
            ]
        }),
    )
}

fn write_fits_csv(path: &Path, fits: &[(&str, &LinearFit, String)]) -> Result<()> {
    write_table(
        path,
        &["fit", "slope", "slope_se", "intercept", "points"],
        fits.iter().map(|(name, f, pts)| {
            vec![
                name.to_string(),
                num(f.slope),
                num(f.slope_se),
                num(f.intercept),
                pts.clone(),
            ]
        }),
    )
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

const SWEEP_COLUMNS: [&str; 10] = [
    "T_star",
    "L_star",
    "w2_upper_coinflip_chain",
    "w2_upper_coinflip_chain_half_width_95",
    "w2_upper_independent",
    "w2_upper_independent_half_width_95",
    "w2_lower",
    "w2_lower_half_width_95",
    "main_rhs",
    "crude_rhs",
];

fn write_csv(cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Vec<PathBuf>> {
    let out = &cfg.output;
    let mut written = vec![out.clone()];
    match outcome {
        Outcome::Checks(c) => write_checks_csv(out, c)?,
        Outcome::Sweep(s) => {
            write_table(
                out,
                &SWEEP_COLUMNS,
                s.rows.iter().map(|r| {
                    vec![
                        num(r.t_star),
                        num(r.l_star),
                        num(r.w2_upper_coinflip_chain.point),
                        num(r.w2_upper_coinflip_chain.half_width_95),
                        num(r.w2_upper_independent.point),
                        num(r.w2_upper_independent.half_width_95),
                        num(r.w2_lower.point),
                        num(r.w2_lower.half_width_95),
                        num(r.main_rhs),
                        num(r.crude_rhs),
                    ]
                }),
            )?;
            let checks = sidecar(out, "checks", "csv");
            write_checks_csv(&checks, &s.checks)?;
            written.push(checks);
            if let Some(fit) = &s.slope {
                let p = sidecar(out, "slope", "csv");
                write_fits_csv(&p, &[("coinflip_chain", &fit.fit, join(&fit.t_stars_used))])?;
                written.push(p);
            }
        }
        Outcome::KmtGap(g) => {
            write_table(
                out,
                &[
                    "n",
                    "quantile_median_gap",
                    "dyadic_median_gap",
                    "quantile_mean_gap",
                    "dyadic_mean_gap",
                    "replicates",
                ],
                g.rows.iter().map(|r| {
                    vec![
                        r.n.to_string(),
                        num(r.quantile_median_gap),
                        num(r.dyadic_median_gap),
                        num(r.quantile_mean_gap),
                        num(r.dyadic_mean_gap),
                        r.replicates.to_string(),
                    ]
                }),
            )?;
            let checks = sidecar(out, "checks", "csv");
            write_checks_csv(&checks, &g.checks)?;
            let fit = sidecar(out, "fit", "csv");
            let sizes: Vec<usize> = g.rows.iter().map(|r| r.n).collect();
            write_fits_csv(
                &fit,
                &[
                    ("quantile", &g.quantile_fit, join(&sizes)),
                    ("dyadic", &g.dyadic_fit, join(&sizes)),
                ],
            )?;
            written.extend([checks, fit]);
        }
        Outcome::Bounds(rows) => write_table(
            out,
            &[
                "T_star",
                "L_star",
                "main_rhs",
                "crude_rhs",
                "coinflip_rhs",
                "synchronous_rhs",
                "kmt_rhs",
                "k1",
                "k2",
                "k3",
                "C",
            ],
            rows.iter().map(|r| {
                let c = &r.constants_used;
                let mut v = vec![
                    num(r.t_star),
                    num(r.l_star),
                    num(r.main_rhs),
                    num(r.crude_rhs),
                    num(r.coinflip_rhs),
                    num(r.synchronous_rhs),
                    num(r.kmt_rhs),
                ];
                v.extend(["k1", "k2", "k3", "C"].iter().map(|k| num(c[*k])));
                v
            }),
        )?,
    }
    Ok(written)
}

fn write_json(cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Vec<PathBuf>> {
    let checks = outcome.checks();
    let doc = JsonReport {
        header: Header {
            experiment: cfg.experiment.name(),
            zeta: cfg.sweep.zeta,
            t_stars: &cfg.sweep.t_stars,
            replicates: cfg.replicates,
            seed: cfg.seed,
            constants: cfg.constants,
            kmt_sizes: &cfg.kmt_sizes,
        },
        result: outcome,
        all_pass: checks.iter().all(|c| c.pass),
        checks,
    };
    let mut w = BufWriter::new(File::create(&cfg.output)?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(vec![cfg.output.clone()])
}

/// Writes the report in the configured format and returns the files written.
pub fn write_report(cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Vec<PathBuf>> {
    if let Some(dir) = cfg.output.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    match cfg.format {
        Format::Csv => write_csv(cfg, outcome),
        Format::Json => write_json(cfg, outcome),
    }
}

#[derive(Serialize)]
struct RowTiming {
    #[serde(rename = "T_star")]
    t_star: f64,
    runtime_seconds: f64,
}

#[derive(Serialize)]
struct Timing {
    total_seconds: f64,
    rows: Vec<RowTiming>,
}

pub fn write_timing(cfg: &ExperimentConfig, outcome: &Outcome, total_seconds: f64) -> Result<PathBuf> {
    let rows = match outcome {
        Outcome::Sweep(s) => s
            .rows
            .iter()
            .map(|r| RowTiming {
                t_star: r.t_star,
                runtime_seconds: r.runtime_seconds,
            })
            .collect(),
        _ => Vec::new(),
    };
    let path = sidecar(&cfg.output, "timing", "json");
    let mut w = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, &Timing { total_seconds, rows })?;
    w.write_all(b"\n")?;
    Ok(path)
}
