//! Exact piecewise-linear and piecewise-constant paths.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Linear,
    Step,
}

/// A path on `[0, horizon]` given segment by segment: on
/// `[breakpoints[i], breakpoints[i+1])` the value is
/// `values[i] + slopes[i] * (t - breakpoints[i])`. The last segment runs to
/// `horizon`. Step paths have zero slopes and are right-continuous; linear
/// paths are continuous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath")]
pub struct PiecewisePath {
    kind: PathKind,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    horizon: f64,
}

#[derive(Deserialize)]
struct RawPath {
    kind: PathKind,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    horizon: f64,
}

impl TryFrom<RawPath> for PiecewisePath {
    type Error = Error;

    fn try_from(r: RawPath) -> Result<Self> {
        PiecewisePath::new(r.kind, r.breakpoints, r.values, r.slopes, r.horizon)
    }
}

const CONTINUITY_TOL: f64 = 1e-9;

impl PiecewisePath {
    pub fn new(
        kind: PathKind,
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        slopes: Vec<f64>,
        horizon: f64,
    ) -> Result<Self> {
        ensure!(
            horizon > 0.0 && horizon.is_finite(),
            "horizon must be positive, got {horizon}"
        );
        ensure!(!breakpoints.is_empty(), "a path needs at least one breakpoint");
        ensure!(
            breakpoints.len() == values.len() && values.len() == slopes.len(),
            "breakpoints, values and slopes must have equal length"
        );
        ensure!(breakpoints[0] == 0.0, "first breakpoint must be 0");
        ensure!(
            breakpoints.windows(2).all(|w| w[0] < w[1]),
            "breakpoints must be strictly increasing"
        );
        ensure!(
            *breakpoints.last().unwrap() <= horizon,
            "breakpoints must not exceed the horizon"
        );
        ensure!(
            values.iter().chain(&slopes).all(|v| v.is_finite()),
            "values and slopes must be finite"
        );
        match kind {
            PathKind::Step => {
                ensure!(slopes.iter().all(|s| *s == 0.0), "step paths have zero slopes");
            }
            PathKind::Linear => {
                for i in 1..breakpoints.len() {
                    let left = values[i - 1] + slopes[i - 1] * (breakpoints[i] - breakpoints[i - 1]);
                    let scale = 1.0 + left.abs().max(values[i].abs());
                    ensure!(
                        (left - values[i]).abs() <= CONTINUITY_TOL * scale,
                        "linear path is discontinuous at t={}",
                        breakpoints[i]
                    );
                }
            }
        }
        Ok(Self {
            kind,
            breakpoints,
            values,
            slopes,
            horizon,
        })
    }

    /// Assembles a path whose invariants the caller has already established.
    pub(crate) fn from_parts(
        kind: PathKind,
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        slopes: Vec<f64>,
        horizon: f64,
    ) -> Self {
        debug_assert!(Self::new(kind, breakpoints.clone(), values.clone(), slopes.clone(), horizon).is_ok());
        Self {
            kind,
            breakpoints,
            values,
            slopes,
            horizon,
        }
    }

    /// Linear interpolant through `(times[i], values[i])`, held constant after
    /// the last sample.
    pub fn from_samples(times: Vec<f64>, values: Vec<f64>, horizon: f64) -> Result<Self> {
        ensure!(times.len() == values.len(), "times and values must have equal length");
        ensure!(!times.is_empty(), "need at least one sample");
        let mut slopes = Vec::with_capacity(times.len());
        for i in 1..times.len() {
            let h = times[i] - times[i - 1];
            ensure!(h > 0.0, "sample times must be strictly increasing");
            slopes.push((values[i] - values[i - 1]) / h);
        }
        slopes.push(0.0);
        Self::new(PathKind::Linear, times, values, slopes, horizon)
    }

    /// Right-continuous step path starting at 0 with a jump of `sizes[k]` at
    /// `jump_times[k]`. Jumps after the horizon are dropped.
    pub fn step(jump_times: &[f64], sizes: &[f64], horizon: f64) -> Result<Self> {
        ensure!(
            jump_times.len() == sizes.len(),
            "jump times and sizes must have equal length"
        );
        let mut breakpoints = vec![0.0];
        let mut values = vec![0.0];
        let mut level = 0.0;
        for (&t, &s) in jump_times.iter().zip(sizes) {
            if t > horizon {
                break;
            }
            level += s;
            if t == 0.0 {
                values[0] = level;
                continue;
            }
            breakpoints.push(t);
            values.push(level);
        }
        let slopes = vec![0.0; breakpoints.len()];
        Self::new(PathKind::Step, breakpoints, values, slopes, horizon)
    }

    /// `t ↦ slope·t`.
    pub fn ray(slope: f64, horizon: f64) -> Result<Self> {
        Self::new(PathKind::Linear, vec![0.0], vec![0.0], vec![slope], horizon)
    }

    pub fn zero(horizon: f64) -> Result<Self> {
        Self::new(PathKind::Step, vec![0.0], vec![0.0], vec![0.0], horizon)
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Index of the segment containing `t` (right-continuous convention).
    pub fn locate(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t).saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.locate(t);
        self.values[i] + self.slopes[i] * (t - self.breakpoints[i])
    }

    /// Evaluates at non-decreasing `times` in one pass.
    pub fn eval_sorted(&self, times: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(times.len());
        let mut i = 0;
        for &t in times {
            while i + 1 < self.breakpoints.len() && self.breakpoints[i + 1] <= t {
                i += 1;
            }
            out.push(self.values[i] + self.slopes[i] * (t - self.breakpoints[i]));
        }
        out
    }

    /// `a · path`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            kind: self.kind,
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
            slopes: self.slopes.iter().map(|s| a * s).collect(),
            horizon: self.horizon,
        }
    }

    /// `s ↦ path(horizon · s)` on `[0, 1]`.
    pub fn time_rescaled(&self) -> Self {
        let h = self.horizon;
        Self {
            kind: self.kind,
            breakpoints: self.breakpoints.iter().map(|b| b / h).collect(),
            values: self.values.clone(),
            slopes: self.slopes.iter().map(|s| s * h).collect(),
            horizon: 1.0,
        }
    }

    /// Supremum of `|path|` over `[0, horizon]`.
    pub fn sup_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.breakpoints.len() {
            let end = self.breakpoints.get(i + 1).copied().unwrap_or(self.horizon);
            let v = self.values[i];
            m = m
                .max(v.abs())
                .max((v + self.slopes[i] * (end - self.breakpoints[i])).abs());
        }
        m
    }
}
