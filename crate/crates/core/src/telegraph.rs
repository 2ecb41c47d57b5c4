//! The free velocity flip path and its closed-form moments.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{ensure, Error, Result};
use crate::path::{PathKind, PiecewisePath};
use crate::randkit::RngState;

/// Physical parameters `(v0, λ, L, T)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub v0: f64,
    pub lambda: f64,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl ScalingParams {
    pub fn new(v0: f64, lambda: f64, length: f64, horizon: f64) -> Result<Self> {
        let p = Self {
            v0,
            lambda,
            length,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit speed and rate, with `T = T★` and `L = L★`.
    pub fn from_scaled(t_star: f64, l_star: f64) -> Result<Self> {
        Self::new(1.0, 1.0, l_star, t_star)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.v0 != 0.0 && self.v0.is_finite(), "v0 must be finite and non-zero");
        ensure!(self.lambda > 0.0 && self.lambda.is_finite(), "lambda must be positive");
        ensure!(self.length > 0.0 && self.length.is_finite(), "L must be positive");
        ensure!(self.horizon > 0.0 && self.horizon.is_finite(), "T must be positive");
        Ok(())
    }

    pub fn t_star(&self) -> f64 {
        self.lambda * self.horizon
    }

    pub fn l_star(&self) -> f64 {
        self.lambda * self.length / self.v0.abs()
    }

    /// Diffusivity `v0² / (λ L²)` of the limiting Brownian motion.
    pub fn sigma2(&self) -> f64 {
        self.v0 * self.v0 / (self.lambda * self.length * self.length)
    }
}

/// Inter-jump gaps `δ_1..δ_n`, followed by `tail_gap` repeated forever.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaitingTimes {
    gaps: Vec<f64>,
    tail_gap: f64,
}

impl WaitingTimes {
    pub fn new(gaps: Vec<f64>, tail_gap: f64) -> Result<Self> {
        ensure!(
            gaps.iter().all(|g| *g > 0.0 && g.is_finite()),
            "waiting-time gaps must be positive and finite"
        );
        ensure!(tail_gap > 0.0 && tail_gap.is_finite(), "tail gap must be positive");
        Ok(Self { gaps, tail_gap })
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn tail_gap(&self) -> f64 {
        self.tail_gap
    }

    /// `δ_k` for `k >= 1`.
    pub fn gap(&self, k: usize) -> f64 {
        self.gaps.get(k - 1).copied().unwrap_or(self.tail_gap)
    }

    /// Jump times `t_1 < t_2 < ...` not exceeding `t`.
    pub fn jump_times_until(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut s = 0.0;
        let mut k = 1;
        loop {
            s += self.gap(k);
            if s > t {
                return out;
            }
            out.push(s);
            k += 1;
        }
    }

    /// `N(t) = sup{n : t_n <= t}`.
    pub fn jump_count(&self, t: f64) -> usize {
        let mut s = 0.0;
        let mut n = 0;
        loop {
            s += self.gap(n + 1);
            if s > t {
                return n;
            }
            n += 1;
        }
    }

    /// `X(t) = v0 Σ_{k<=M} (-1)^{k-1} δ_k + v0 (-1)^M (t - t_M)` with `M = N(t)`.
    pub fn path_eval(&self, t: f64, v0: f64) -> f64 {
        let mut x = 0.0;
        let mut s = 0.0;
        let mut sign = 1.0;
        let mut k = 1;
        loop {
            let d = self.gap(k);
            if s + d > t {
                return v0 * (x + sign * (t - s));
            }
            x += sign * d;
            s += d;
            sign = -sign;
            k += 1;
        }
    }

    /// The exact path on `[0, horizon]`: one breakpoint at 0 plus one per jump.
    pub fn to_path(&self, v0: f64, horizon: f64) -> Result<PiecewisePath> {
        ensure!(horizon > 0.0, "horizon must be positive");
        let times = self.jump_times_until(horizon);
        let mut breakpoints = Vec::with_capacity(times.len() + 1);
        let mut values = Vec::with_capacity(times.len() + 1);
        let mut slopes = Vec::with_capacity(times.len() + 1);
        breakpoints.push(0.0);
        values.push(0.0);
        slopes.push(v0);
        let mut x = 0.0;
        let mut prev = 0.0;
        let mut slope = v0;
        for t in times {
            x += slope * (t - prev);
            slope = -slope;
            prev = t;
            breakpoints.push(t);
            values.push(x);
            slopes.push(slope);
        }
        Ok(PiecewisePath::from_parts(
            PathKind::Linear,
            breakpoints,
            values,
            slopes,
            horizon,
        ))
    }
}

const MAX_JUMPS: usize = 100_000_000;

/// Exp(λ) gaps up to and including the first one whose partial sum exceeds `T`.
pub fn sample_waiting_times(rng: &mut RngState, params: &ScalingParams) -> Result<Vec<f64>> {
    params.validate()?;
    let mut gaps = Vec::with_capacity((params.t_star() * 1.2) as usize + 4);
    let mut s = 0.0;
    while s <= params.horizon {
        if gaps.len() >= MAX_JUMPS {
            return Err(Error::ResourceLimit(format!("more than {MAX_JUMPS} jumps before T")));
        }
        let g = rng.exp1() / params.lambda;
        s += g;
        gaps.push(g);
    }
    Ok(gaps)
}

/// One telegraph path on `[0, T]`. With `random_initial_velocity` the starting
/// velocity is `±v0` with equal probability.
pub fn sample_telegraph(
    rng: &mut RngState,
    params: &ScalingParams,
    random_initial_velocity: bool,
) -> Result<PiecewisePath> {
    let gaps = sample_waiting_times(rng, params)?;
    let v0 = if random_initial_velocity && rng.unit() < 0.5 {
        -params.v0
    } else {
        params.v0
    };
    // The last gap overshoots T, so the tail sentinel is never consulted.
    WaitingTimes::new(gaps, 2.0 * params.horizon)?.to_path(v0, params.horizon)
}

pub fn mean_exact(t: f64, params: &ScalingParams) -> f64 {
    let l = params.lambda;
    params.v0 / (2.0 * l) * -(-2.0 * l * t).exp_m1()
}

pub fn second_moment_exact(t: f64, params: &ScalingParams) -> f64 {
    let l = params.lambda;
    let lt = l * t;
    params.v0 * params.v0 / (2.0 * l * l) * (2.0 * lt + (-2.0 * lt).exp_m1())
}

pub fn variance_exact(t: f64, params: &ScalingParams) -> f64 {
    let l = params.lambda;
    let lt = l * t;
    let e2 = (-2.0 * lt).exp();
    let v = params.v0 * params.v0 / (l * l) * (lt + e2 - e2 * e2 / 4.0 - 0.75);
    if lt < 1e-3 {
        // Cancellation regime: use the series 4(λt)³/3 - 2(λt)⁴ + ... of the bracket.
        let s = 4.0 * lt.powi(3) / 3.0 - 2.0 * lt.powi(4) + 28.0 * lt.powi(5) / 15.0;
        return params.v0 * params.v0 / (l * l) * s;
    }
    v.max(0.0)
}

/// `C̃(r) = 2^{r/2} Γ((r+1)/2) / √π`, the `r`-th absolute moment of N(0, 1).
pub fn c_tilde(r: f64) -> f64 {
    2.0_f64.powf(r / 2.0) * gamma((r + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

/// Frozen values of the constant `C(r)` in the absolute-moment bound for
/// `r ∈ {1, 2, 4}`, calibrated by brute-force simulation with a safety margin.
pub fn default_c_r(r: f64) -> Option<f64> {
    if r == 1.0 {
        Some(DEFAULT_C1)
    } else if r == 2.0 {
        Some(0.0)
    } else if r == 4.0 {
        Some(DEFAULT_C4)
    } else {
        None
    }
}

pub const DEFAULT_C1: f64 = 0.1;
pub const DEFAULT_C4: f64 = 0.5;

/// `min{ |v0|^r (C̃(r) λ^{-r/2} t^{r/2} + C(r) λ^{-r/2-1} t^{r/2-1}), |v0|^r t^r }`.
pub fn abs_moment_bound(t: f64, r: f64, params: &ScalingParams, c_r: f64) -> f64 {
    assert!(t > 0.0 && r > 0.0 && c_r >= 0.0);
    let l = params.lambda;
    let a = params.v0.abs().powf(r);
    let stated =
        a * (c_tilde(r) * l.powf(-r / 2.0) * t.powf(r / 2.0) + c_r * l.powf(-r / 2.0 - 1.0) * t.powf(r / 2.0 - 1.0));
    stated.min(a * t.powf(r))
}
