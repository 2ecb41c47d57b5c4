//! Maximal coupling of `ν₁(dr) = n r^{n-1} 1{0<r<=1} dr` with
//! `ν₂ = Gamma(n, n)`. The density ratio is
//! `g(r) = ν₁/ν₂ = n! n^{-n} e^{nr} 1{0<r<=1}`, increasing on `(0, 1]`, so
//! `{g < 1} = (0, r★) ∪ (1, ∞)` with `r★ = (n ln n − ln n!)/n`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{ensure, Error, Result};
use crate::randkit::{sample_gamma, RngState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchTag {
    Diagonal,
    Offdiagonal,
    #[serde(rename = "n/a")]
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinFlipR {
    pub r1: f64,
    pub r2: f64,
    pub branch: BranchTag,
}

const MAX_REJECTIONS: usize = 1_000_000;

fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Threshold `r★` where `g` crosses 1.
pub fn r_star(n: usize) -> f64 {
    let nf = n as f64;
    (nf * nf.ln() - ln_factorial(n)) / nf
}

/// `ln g(r)`, `-∞` outside `(0, 1]`.
pub fn ln_g(n: usize, r: f64) -> f64 {
    if r <= 0.0 || r > 1.0 {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    ln_factorial(n) - nf * nf.ln() + nf * r
}

/// `Z = ∫ (ν₂ − ν₁)₊ = [G(r★) − r★ⁿ] + [1 − G(1)]` with `G` the Gamma(n, n) CDF;
/// the off-diagonal probability.
pub fn offdiagonal_mass(n: usize) -> f64 {
    let nf = n as f64;
    let rs = r_star(n);
    let below = if rs > 0.0 {
        gamma_lr(nf, nf * rs) - rs.powi(n as i32)
    } else {
        0.0
    };
    below + (1.0 - gamma_lr(nf, nf))
}

/// Completes a coupled draw given the `ν₂` coordinate `r2`.
pub fn coinflip_given_r2(rng: &mut RngState, n: usize, r2: f64) -> Result<CoinFlipR> {
    ensure!(n >= 1, "coin-flip coupling needs n >= 1");
    ensure!(r2 > 0.0 && r2.is_finite(), "r2 must be positive");
    let lg = ln_g(n, r2);
    if lg >= 0.0 || rng.unit() < lg.exp() {
        return Ok(CoinFlipR {
            r1: r2,
            r2,
            branch: BranchTag::Diagonal,
        });
    }
    // r1 from (ν₁ − ν₂)₊ ∝ ν₁ (1 − 1/g)₊: propose from ν₁ by inversion.
    let inv_n = 1.0 / n as f64;
    let rs = r_star(n);
    for _ in 0..MAX_REJECTIONS {
        let r = rng.open01().powf(inv_n);
        if r <= rs {
            continue;
        }
        if rng.unit() < -(-ln_g(n, r)).exp_m1() {
            return Ok(CoinFlipR {
                r1: r,
                r2,
                branch: BranchTag::Offdiagonal,
            });
        }
    }
    Err(Error::ResourceLimit(format!(
        "coin-flip rejection loop exceeded {MAX_REJECTIONS} proposals (n={n})"
    )))
}

/// Draws `r2 ~ Gamma(n, n)` and couples it to `r1 ~ ν₁`.
pub fn coinflip_r_pair(rng: &mut RngState, n: usize) -> Result<CoinFlipR> {
    ensure!(n >= 1, "coin-flip coupling needs n >= 1");
    let r2 = sample_gamma(rng, n as u64, n as f64)?;
    coinflip_given_r2(rng, n, r2)
}
