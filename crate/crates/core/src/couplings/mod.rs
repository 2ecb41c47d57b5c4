//! Coupled path pairs: independent, coin-flip, synchronous, strong
//! approximation, and the glued chain from the telegraph path to Brownian
//! motion.

pub mod brownian;
pub mod coinflip;
pub mod kmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::path::PiecewisePath;
use crate::randkit::RngState;
use crate::surrogate::{build_y, build_z, build_ztilde, grid_times, walk_increments, SurrogateInputs};
use crate::telegraph::{sample_telegraph, ScalingParams, WaitingTimes};

pub use brownian::{brownian_fill, brownian_path, default_eval_times};
pub use coinflip::{coinflip_given_r2, coinflip_r_pair, offdiagonal_mass, r_star, BranchTag, CoinFlipR};
pub use kmt::{couple_increments, max_partial_sum_gap, KmtMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingTag {
    Independent,
    Coinflip,
    Synchronous,
    Kmt,
    Chain,
}

/// Two paths on the same `[0, T]` built from shared or coupled randomness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledPathPair {
    pub left: PiecewisePath,
    pub right: PiecewisePath,
    pub coupling_tag: CouplingTag,
    pub branch_tag: BranchTag,
    /// Jump count `K` when the coupling draws one.
    pub n: Option<usize>,
}

impl CoupledPathPair {
    pub fn cost(&self) -> Result<f64> {
        crate::transport::average_quadratic_cost(&self.left, &self.right, self.left.horizon())
    }
}

/// `L^{-1}` times an independent telegraph path, against an independent
/// Brownian path with diffusivity `σ²`.
pub fn independent_pair(rng: &mut RngState, params: &ScalingParams) -> Result<CoupledPathPair> {
    let mut a = rng.derive(1);
    let mut b = rng.derive(2);
    let left = sample_telegraph(&mut a, params, false)?.scaled(1.0 / params.length);
    let times = default_eval_times(params.horizon, left.breakpoints());
    let right = brownian_path(params.sigma2(), &times, params.horizon, &mut b)?;
    Ok(CoupledPathPair {
        left,
        right,
        coupling_tag: CouplingTag::Independent,
        branch_tag: BranchTag::NotApplicable,
        n: None,
    })
}

/// `L^{-1} X(·; T r ū)` with tail sentinel `2T`.
fn scaled_flip_path(params: &ScalingParams, r: f64, u_bar: &[f64]) -> Result<PiecewisePath> {
    let gaps: Vec<f64> = u_bar.iter().map(|x| params.horizon * r * x).collect();
    Ok(WaitingTimes::new(gaps, 2.0 * params.horizon)?
        .to_path(params.v0, params.horizon)?
        .scaled(1.0 / params.length))
}

/// Splits `u` into `r2 = Σu/n` and the simplex point `ū = u/Σu`.
fn radial_split(u: &[f64]) -> (f64, Vec<f64>) {
    let total: f64 = u.iter().sum();
    (total / u.len() as f64, u.iter().map(|x| x / total).collect())
}

/// Coin-flip coupling of the telegraph path (left) with the decoupled
/// process `Y` (right). `K ~ Po(T★)` is shared; `u` from Exp(1) gives
/// `r2 = Σu/K` (a Gamma(K, K) draw) and the simplex point `ū = u/Σu`,
/// independent of each other; `r1 ~ ν₁` is then coupled to `r2`.
pub fn coinflip_pair(rng: &mut RngState, params: &ScalingParams) -> Result<CoupledPathPair> {
    let inputs = SurrogateInputs::sample(rng, params)?;
    let n = inputs.n;
    if n == 0 {
        let ray = PiecewisePath::ray(params.v0 / params.length, params.horizon)?;
        return Ok(CoupledPathPair {
            left: ray.clone(),
            right: ray,
            coupling_tag: CouplingTag::Coinflip,
            branch_tag: BranchTag::Diagonal,
            n: Some(0),
        });
    }
    let (r2, u_bar) = radial_split(&inputs.u);
    let draw = coinflip_given_r2(rng, n, r2)?;
    let right = build_y(&inputs)?;
    let left = if draw.branch == BranchTag::Diagonal {
        right.clone()
    } else {
        scaled_flip_path(params, draw.r1, &u_bar)?
    };
    Ok(CoupledPathPair {
        left,
        right,
        coupling_tag: CouplingTag::Coinflip,
        branch_tag: draw.branch,
        n: Some(n),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SynchronousPair {
    #[serde(rename = "Y-vs-Ztilde")]
    YvsZtilde,
    #[serde(rename = "Ztilde-vs-Z")]
    ZtildevsZ,
    #[serde(rename = "Y-vs-Z")]
    YvsZ,
}

/// One draw of `(K, u)` fed to two builders.
pub fn synchronous_pair(rng: &mut RngState, params: &ScalingParams, which: SynchronousPair) -> Result<CoupledPathPair> {
    let inputs = SurrogateInputs::sample(rng, params)?;
    let (left, right) = match which {
        SynchronousPair::YvsZtilde => (build_y(&inputs)?, build_ztilde(&inputs)?),
        SynchronousPair::ZtildevsZ => (build_ztilde(&inputs)?, build_z(&inputs)?),
        SynchronousPair::YvsZ => (build_y(&inputs)?, build_z(&inputs)?),
    };
    Ok(CoupledPathPair {
        left,
        right,
        coupling_tag: CouplingTag::Synchronous,
        branch_tag: BranchTag::NotApplicable,
        n: Some(inputs.n),
    })
}

/// Grid skeleton of a strong-approximation draw: the walk `S` and the
/// Brownian path `B` at the times `ℓT/ñ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmtSkeleton {
    pub n: usize,
    pub grid_times: Vec<f64>,
    pub walk: Vec<f64>,
    pub brownian: Vec<f64>,
}

impl KmtSkeleton {
    pub fn max_gap(&self) -> f64 {
        self.walk
            .iter()
            .zip(&self.brownian)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Brownian path coupled to the even-jump walk of `inputs`. The `ñ = ⌊K/2⌋`
/// Laplace increments are coupled to N(0, 2) partners, which become the
/// values `B(ℓT/ñ) = √(σ²T/(2ñ)) G_ℓ`; the rest of the path is filled with
/// bridges. Draws with `K < 2` get an independent Brownian path.
fn coupled_brownian(
    rng: &mut RngState,
    inputs: &SurrogateInputs,
    mode: KmtMode,
    partner_breaks: &[f64],
) -> Result<(PiecewisePath, KmtSkeleton)> {
    let params = &inputs.params;
    let (horizon, sigma2) = (params.horizon, params.sigma2());
    let m = inputs.n / 2;
    let times = default_eval_times(horizon, partner_breaks);
    if m == 0 {
        let right = brownian_path(sigma2, &times, horizon, rng)?;
        let skeleton = KmtSkeleton {
            n: inputs.n,
            grid_times: vec![0.0],
            walk: vec![0.0],
            brownian: vec![0.0],
        };
        return Ok((right, skeleton));
    }
    let inc = walk_increments(inputs);
    let l_star = params.l_star();
    let xi: Vec<f64> = inc.eta_star.iter().map(|e| e * l_star).collect();
    let g = couple_increments(&xi, mode)?;
    let scale = (sigma2 * horizon / (2.0 * m as f64)).sqrt();
    let grid = grid_times(m, horizon);
    let brownian: Vec<f64> = kmt::partial_sums(&g).iter().map(|x| scale * x).collect();
    let walk = kmt::partial_sums(&inc.eta_star);
    let right = brownian_fill(&grid, &brownian, sigma2, &times, horizon, rng)?;
    Ok((
        right,
        KmtSkeleton {
            n: inputs.n,
            grid_times: grid,
            walk,
            brownian,
        },
    ))
}

/// The walk `Z` (left) against a Brownian path (right) coupled through the
/// grid skeleton. The coupling is built conditionally on `K = n`.
pub fn kmt_pair(rng: &mut RngState, params: &ScalingParams, mode: KmtMode) -> Result<(CoupledPathPair, KmtSkeleton)> {
    let inputs = SurrogateInputs::sample(rng, params)?;
    let left = build_z(&inputs)?;
    let (right, skeleton) = coupled_brownian(rng, &inputs, mode, left.breakpoints())?;
    Ok((
        CoupledPathPair {
            left,
            right,
            coupling_tag: CouplingTag::Kmt,
            branch_tag: BranchTag::NotApplicable,
            n: Some(inputs.n),
        },
        skeleton,
    ))
}

/// The glued chain `X → Y → Z → B` on one probability space: the telegraph
/// path from the coin-flip stage (left) and the Brownian path from the dyadic
/// strong approximation of the same walk (right).
pub fn chain_pair(rng: &mut RngState, params: &ScalingParams) -> Result<CoupledPathPair> {
    let inputs = SurrogateInputs::sample(rng, params)?;
    let n = inputs.n;
    let (left, branch) = if n == 0 {
        (
            PiecewisePath::ray(params.v0 / params.length, params.horizon)?,
            BranchTag::Diagonal,
        )
    } else {
        let (r2, u_bar) = radial_split(&inputs.u);
        let draw = coinflip_given_r2(rng, n, r2)?;
        (scaled_flip_path(params, draw.r1, &u_bar)?, draw.branch)
    };
    let (right, _) = coupled_brownian(rng, &inputs, KmtMode::Dyadic, left.breakpoints())?;
    Ok(CoupledPathPair {
        left,
        right,
        coupling_tag: CouplingTag::Chain,
        branch_tag: branch,
        n: Some(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Moments;
    use crate::telegraph::variance_exact;

    #[test]
    fn coinflip_diagonal_and_empty_draws_cost_nothing() {
        let params = ScalingParams::from_scaled(3.0, 2.0).unwrap();
        let mut rng = RngState::new(81, 0);
        let mut seen = [false; 2];
        for _ in 0..2000 {
            let p = coinflip_pair(&mut rng, &params).unwrap();
            if p.branch_tag == BranchTag::Diagonal {
                assert_eq!(p.cost().unwrap(), 0.0);
                seen[0] = true;
            } else {
                seen[1] = true;
            }
            if p.n == Some(0) {
                assert_eq!(p.left, p.right);
                assert_eq!(p.left.eval(1.0), 0.5);
            }
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn coinflip_left_marginal_is_telegraph() {
        let params = ScalingParams::new(1.0, 1.0, 2.0, 2.0).unwrap();
        let mut rng = RngState::new(82, 0);
        let ends: Moments = (0..100_000)
            .map(|_| coinflip_pair(&mut rng, &params).unwrap().left.eval(2.0))
            .collect();
        let target = variance_exact(2.0, &params) / 4.0;
        let se = target * (2.0f64 / 100_000.0).sqrt() * 1.5;
        assert!(
            (ends.variance() - target).abs() < 4.0 * se,
            "{} vs {target}",
            ends.variance()
        );
    }

    #[test]
    fn synchronous_small_k_has_zero_walks() {
        let params = ScalingParams::from_scaled(0.3, 1.0).unwrap();
        let mut rng = RngState::new(83, 0);
        for _ in 0..200 {
            let p = synchronous_pair(&mut rng, &params, SynchronousPair::ZtildevsZ).unwrap();
            if p.n.unwrap() < 2 {
                assert_eq!(p.left.sup_abs(), 0.0);
                assert_eq!(p.right.sup_abs(), 0.0);
            }
        }
    }

    #[test]
    fn kmt_skeleton_lines_up() {
        let params = ScalingParams::from_scaled(40.0, 6.0).unwrap();
        let mut rng = RngState::new(84, 0);
        for mode in [KmtMode::Quantile, KmtMode::Dyadic] {
            let (pair, sk) = kmt_pair(&mut rng, &params, mode).unwrap();
            let m = sk.n / 2;
            assert_eq!(sk.walk.len(), m + 1);
            assert_eq!(sk.brownian.len(), m + 1);
            for (t, b) in sk.grid_times.iter().zip(&sk.brownian) {
                assert_eq!(pair.right.eval(*t), *b);
            }
            assert!(sk.max_gap() < 2.0);
        }
    }

    #[test]
    fn chain_marginals() {
        let params = ScalingParams::from_scaled(4.0, 2.0).unwrap();
        let mut rng = RngState::new(85, 0);
        let draws = 40_000;
        let (mut x, mut b) = (Moments::default(), Moments::default());
        for _ in 0..draws {
            let p = chain_pair(&mut rng, &params).unwrap();
            x.push(p.left.eval(4.0));
            b.push(p.right.eval(4.0));
        }
        let vx = variance_exact(4.0, &params) / 4.0;
        let vb = params.sigma2() * 4.0;
        let tol = |v: f64| 4.0 * v * (2.0f64 / draws as f64).sqrt() * 1.5;
        assert!((x.variance() - vx).abs() < tol(vx), "{} vs {vx}", x.variance());
        assert!((b.variance() - vb).abs() < tol(vb), "{} vs {vb}", b.variance());
        assert!(b.mean().abs() < 4.0 * b.se_mean());
    }
}
