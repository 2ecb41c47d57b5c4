use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use telecoupler_core::bounds::Constants;
use telecoupler_core::ScalingParams;

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VerifyMoments,
    VerifyCouplings,
    ConvergenceSweep,
    KmtGap,
    BoundsTable,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::VerifyMoments => "verify-moments",
            Experiment::VerifyCouplings => "verify-couplings",
            Experiment::ConvergenceSweep => "convergence-sweep",
            Experiment::KmtGap => "kmt-gap",
            Experiment::BoundsTable => "bounds-table",
        }
    }

    pub fn is_statistical(&self) -> bool {
        !matches!(self, Experiment::BoundsTable)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Points `(T★, L★ = sqrt(T★/ζ))` along the diffusive scaling curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub zeta: f64,
    #[serde(rename = "T_stars")]
    pub t_stars: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(HarnessError::Config(format!(
                "zeta must be positive, got {}",
                self.zeta
            )));
        }
        if self.t_stars.is_empty() {
            return Err(HarnessError::Config("need at least one T* value".into()));
        }
        if !self.t_stars.iter().all(|t| *t > 0.0 && t.is_finite()) {
            return Err(HarnessError::Config("T* values must be positive and finite".into()));
        }
        if !self.t_stars.windows(2).all(|w| w[0] < w[1]) {
            return Err(HarnessError::Config("T* values must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn l_star(&self, t_star: f64) -> f64 {
        (t_star / self.zeta).sqrt()
    }

    pub fn params(&self) -> Result<Vec<ScalingParams>> {
        self.t_stars
            .iter()
            .map(|&t| Ok(ScalingParams::from_scaled(t, self.l_star(t))?))
            .collect()
    }
}

pub fn default_kmt_sizes() -> Vec<usize> {
    (4..=12).map(|k| 1usize << k).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub sweep: SweepSpec,
    pub replicates: u64,
    pub seed: u64,
    pub output: PathBuf,
    pub format: Format,
    pub constants: Constants,
    /// Walk lengths for `kmt-gap`.
    pub kmt_sizes: Vec<usize>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, output: impl Into<PathBuf>) -> Self {
        Self {
            experiment,
            sweep: SweepSpec {
                zeta: 1.0,
                t_stars: vec![16.0, 64.0, 256.0, 1024.0],
            },
            replicates: 10_000,
            seed: 0,
            output: output.into(),
            format: Format::Csv,
            constants: Constants::default(),
            kmt_sizes: default_kmt_sizes(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep.validate()?;
        if self.experiment.is_statistical() && self.replicates < 100 {
            return Err(HarnessError::Config(format!(
                "{} needs at least 100 replicates, got {}",
                self.experiment.name(),
                self.replicates
            )));
        }
        if self.experiment == Experiment::ConvergenceSweep && self.sweep.t_stars.len() < 4 {
            return Err(HarnessError::Config(
                "a convergence sweep needs at least 4 T* values".into(),
            ));
        }
        if self.experiment == Experiment::KmtGap
            && (self.kmt_sizes.len() < 2 || !self.kmt_sizes.windows(2).all(|w| w[0] < w[1]) || self.kmt_sizes[0] < 2)
        {
            return Err(HarnessError::Config(
                "kmt sizes must be at least two strictly increasing values >= 2".into(),
            ));
        }
        let c = &self.constants;
        if ![c.k1, c.k2, c.k3, c.c].iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(HarnessError::Config("constants must be positive".into()));
        }
        Ok(())
    }
}
