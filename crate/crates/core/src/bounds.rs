//! Closed-form evaluators of the analytic bounds. Constants are supplied by
//! the caller; only the functional forms are fixed here.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{ensure, Error, Result};
use crate::telegraph::c_tilde;

fn check_scales(t_star: f64, l_star: f64) -> Result<()> {
    ensure!(t_star > 0.0 && t_star.is_finite(), "T* must be positive, got {t_star}");
    ensure!(l_star > 0.0 && l_star.is_finite(), "L* must be positive, got {l_star}");
    Ok(())
}

/// `C √(T★/L★²) T★^{-1/4} (√ln(T★+3) + T★^{-3/4}) + C/L★`.
pub fn main_bound_rhs(t_star: f64, l_star: f64, c: f64) -> Result<f64> {
    check_scales(t_star, l_star)?;
    ensure!(c > 0.0, "C must be positive");
    let lead = (t_star / (l_star * l_star)).sqrt() * t_star.powf(-0.25);
    Ok(c * lead * ((t_star + 3.0).ln().sqrt() + t_star.powf(-0.75)) + c / l_star)
}

/// Root of the independent-coupling cost,
/// `sqrt((1/(4T★L★²))(1 − e^{-2T★}) − 1/(2L★²) + T★/L★²)`, returned twice:
/// the crude bound and the exact independent value coincide.
pub fn crude_and_exact_independent(t_star: f64, l_star: f64) -> Result<(f64, f64)> {
    check_scales(t_star, l_star)?;
    let l2 = l_star * l_star;
    let inner = if t_star < 1e-3 {
        // (1 − e^{-2x})/(4x) − 1/2 + x = x/2 + x²/3 − x³/6 + ...
        (0.5 * t_star + t_star * t_star / 3.0 - t_star.powi(3) / 6.0) / l2
    } else {
        -(-2.0 * t_star).exp_m1() / (4.0 * t_star * l2) - 0.5 / l2 + t_star / l2
    };
    if inner < -1e-14 {
        return Err(Error::NumericResolution(format!("negative squared cost {inner}")));
    }
    let v = inner.max(0.0).sqrt();
    Ok((v, v))
}

/// `κ₁ √(T★/L★²) T★^{-1/4} √ln(T★+3) + κ₁/L★`.
pub fn coinflip_bound(t_star: f64, l_star: f64, k1: f64) -> Result<f64> {
    check_scales(t_star, l_star)?;
    let lead = (t_star / (l_star * l_star)).sqrt() * t_star.powf(-0.25);
    Ok(k1 * lead * (t_star + 3.0).ln().sqrt() + k1 / l_star)
}

/// `κ √(T★/L★²) T★^{-1/4} (1 + T★^{-3/4})`, shared by the synchronous and
/// strong-approximation stages.
fn quarter_bound(t_star: f64, l_star: f64, k: f64) -> Result<f64> {
    check_scales(t_star, l_star)?;
    let lead = (t_star / (l_star * l_star)).sqrt() * t_star.powf(-0.25);
    Ok(k * lead * (1.0 + t_star.powf(-0.75)))
}

pub fn synchronous_bound(t_star: f64, l_star: f64, k2: f64) -> Result<f64> {
    quarter_bound(t_star, l_star, k2)
}

pub fn kmt_bound(t_star: f64, l_star: f64, k3: f64) -> Result<f64> {
    quarter_bound(t_star, l_star, k3)
}

/// `(coinflip, synchronous, kmt)` stage bounds.
pub fn component_bounds(t_star: f64, l_star: f64, kappas: [f64; 3]) -> Result<(f64, f64, f64)> {
    Ok((
        coinflip_bound(t_star, l_star, kappas[0])?,
        synchronous_bound(t_star, l_star, kappas[1])?,
        kmt_bound(t_star, l_star, kappas[2])?,
    ))
}

/// `2p · max{C₁, C₂} · w2` bounding the gap of time-averaged `p`-th moments.
/// For `p = 1` both constants equal 1 and `c_prime` is ignored.
pub fn moment_gap_bound(p: f64, t_star: f64, l_star: f64, c_prime: Option<f64>, w2: f64) -> Result<f64> {
    ensure!(p > 0.0, "p must be positive, got {p}");
    ensure!(w2 >= 0.0, "w2 must be non-negative");
    check_scales(t_star, l_star)?;
    if p == 1.0 {
        if let Some(c) = c_prime {
            log::warn!("moment_gap_bound: C'={c} is ignored for p = 1");
        }
        return Ok(2.0 * w2);
    }
    let (c1, c2) = moment_gap_constants(p, t_star, l_star, c_prime.unwrap_or(1.0));
    Ok(2.0 * p * c1.max(c2) * w2)
}

/// `(C₁, C₂)` of [`moment_gap_bound`] for `p ≠ 1`.
pub fn moment_gap_constants(p: f64, t_star: f64, l_star: f64, c_prime: f64) -> (f64, f64) {
    let scale = l_star.powf(2.0 * (p - 1.0));
    let c1_sq = c_tilde(2.0 * (p - 1.0)) * t_star.powf(p - 1.0) / (p * scale)
        + c_prime * t_star.powf(p - 2.0) / ((p - 1.0) * scale);
    let c2_sq = 2.0_f64.powf(p - 1.0) * gamma((2.0 * p - 1.0) / 2.0) / (p * std::f64::consts::PI.sqrt())
        * t_star.powf(p - 1.0)
        / scale;
    (c1_sq.max(0.0).sqrt(), c2_sq.max(0.0).sqrt())
}

/// Whether `||x|^p − |y|^p| <= p(|x|^{p-1} + |y|^{p-1})|x − y| + slack`.
pub fn w_lipschitz_holds(x: f64, y: f64, p: f64, slack: f64) -> bool {
    let lhs = (x.abs().powf(p) - y.abs().powf(p)).abs();
    let weight = |z: f64| {
        if z == 0.0 && p < 1.0 {
            f64::INFINITY
        } else {
            z.abs().powf(p - 1.0)
        }
    };
    let rhs = p * (weight(x) + weight(y)) * (x - y).abs();
    lhs <= rhs + slack || (x == y)
}

/// Caller-supplied constants `κ₁, κ₂, κ₃, C`, parsed from `k1=..,k2=..,k3=..,C=..`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            c: 1.0,
        }
    }
}

impl Constants {
    pub fn as_map(&self) -> BTreeMap<String, f64> {
        [("C", self.c), ("k1", self.k1), ("k2", self.k2), ("k3", self.k3)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }
}

impl FromStr for Constants {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Constants::default();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| crate::error::invalid(format!("expected key=value, got '{item}'")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| crate::error::invalid(format!("bad number in '{item}'")))?;
            ensure!(v > 0.0 && v.is_finite(), "constant {key} must be positive");
            match key.trim() {
                "k1" => out.k1 = v,
                "k2" => out.k2 = v,
                "k3" => out.k3 = v,
                "C" | "c" => out.c = v,
                other => return Err(crate::error::invalid(format!("unknown constant '{other}'"))),
            }
        }
        Ok(out)
    }
}

/// All bound curves at one `(T★, L★)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(rename = "T_star")]
    pub t_star: f64,
    #[serde(rename = "L_star")]
    pub l_star: f64,
    pub main_rhs: f64,
    pub crude_rhs: f64,
    pub coinflip_rhs: f64,
    pub synchronous_rhs: f64,
    pub kmt_rhs: f64,
    pub constants_used: BTreeMap<String, f64>,
}

impl BoundReport {
    pub fn evaluate(t_star: f64, l_star: f64, constants: &Constants) -> Result<Self> {
        let (coinflip_rhs, synchronous_rhs, kmt_rhs) =
            component_bounds(t_star, l_star, [constants.k1, constants.k2, constants.k3])?;
        Ok(Self {
            t_star,
            l_star,
            main_rhs: main_bound_rhs(t_star, l_star, constants.c)?,
            crude_rhs: crude_and_exact_independent(t_star, l_star)?.0,
            coinflip_rhs,
            synchronous_rhs,
            kmt_rhs,
            constants_used: constants.as_map(),
        })
    }
}
