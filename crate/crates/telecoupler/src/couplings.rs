//! Coupling audits: coin-flip marginals, the independent-coupling oracle,
//! the synchronous interpolation identity and the w-Lipschitz estimate.

use telecoupler_core::bounds::{crude_and_exact_independent, moment_gap_bound, w_lipschitz_holds};
use telecoupler_core::couplings::coinflip::ln_g;
use telecoupler_core::couplings::{chain_pair, coinflip_r_pair, independent_pair, offdiagonal_mass, BranchTag};
use telecoupler_core::randkit::sample_gamma;
use telecoupler_core::stats::{variance_se, Moments};
use telecoupler_core::surrogate::{build_y_on, build_ztilde_on, SurrogateInputs};
use telecoupler_core::telegraph::{mean_exact, variance_exact};
use telecoupler_core::transport::{replicate, w2_from_costs, Z95};
use telecoupler_core::{RngState, ScalingParams};

use crate::checks::{stream_block, CheckResult, SE_MULTIPLIER};
use crate::config::ExperimentConfig;
use crate::error::Result;

pub const COINFLIP_SIZES: [usize; 3] = [2, 8, 32];
pub const LIPSCHITZ_ORDERS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];

/// Marginal moments of both coordinates of the coin-flip coupling and the
/// normalisation `P(diagonal) + Z = 1`, with `Z` estimated independently as
/// `E_{ν₂}[(1 - g)₊]`.
pub fn coinflip_audit(seed: u64, draws: u64, sizes: &[usize]) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let nf = n as f64;
        let d = replicate(seed, stream_block(100 + i as u64), draws, |_, rng| {
            coinflip_r_pair(rng, n)
        })?;
        let r1 = d.iter().map(|d| d.r1).collect::<Moments>();
        let r1sq = d.iter().map(|d| d.r1 * d.r1).collect::<Moments>();
        let r2s: Vec<f64> = d.iter().map(|d| d.r2).collect();
        let r2 = r2s.iter().copied().collect::<Moments>();
        let diag = d
            .iter()
            .map(|d| (d.branch == BranchTag::Diagonal) as u8 as f64)
            .collect::<Moments>();
        out.push(CheckResult::z_test(
            format!("coinflip-r1-mean n={n}"),
            "E r1 = n/(n+1)",
            r1.mean(),
            nf / (nf + 1.0),
            r1.se_mean(),
            SE_MULTIPLIER,
        ));
        out.push(CheckResult::z_test(
            format!("coinflip-r1-second-moment n={n}"),
            "E r1^2 = n/(n+2)",
            r1sq.mean(),
            nf / (nf + 2.0),
            r1sq.se_mean(),
            SE_MULTIPLIER,
        ));
        out.push(CheckResult::z_test(
            format!("coinflip-r2-mean n={n}"),
            "E r2 = 1",
            r2.mean(),
            1.0,
            r2.se_mean(),
            SE_MULTIPLIER,
        ));
        out.push(CheckResult::z_test(
            format!("coinflip-r2-variance n={n}"),
            "Var r2 = 1/n",
            r2.variance(),
            1.0 / nf,
            variance_se(&r2s),
            SE_MULTIPLIER,
        ));
        let z_mc = replicate(seed, stream_block(110 + i as u64), draws, |_, rng| {
            let r = sample_gamma(rng, n as u64, nf)?;
            Ok((1.0 - ln_g(n, r).exp()).max(0.0))
        })?
        .into_iter()
        .collect::<Moments>();
        out.push(CheckResult::z_test(
            format!("coinflip-normalisation n={n}"),
            "P(diagonal) + Z = 1",
            diag.mean() + z_mc.mean(),
            1.0,
            (diag.se_mean().powi(2) + z_mc.se_mean().powi(2)).sqrt(),
            SE_MULTIPLIER,
        ));
        out.push(CheckResult::z_test(
            format!("coinflip-offdiagonal-mass n={n}"),
            "Z = [G(r*) - r*^n] + [1 - G(1)]",
            z_mc.mean(),
            offdiagonal_mass(n),
            z_mc.se_mean(),
            SE_MULTIPLIER,
        ));
    }
    Ok(out)
}

/// `sqrt(mean c₂)` under the independent coupling against its closed form.
pub fn independent_oracle(seed: u64, replicates: u64, points: &[ScalingParams]) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (i, params) in points.iter().enumerate() {
        let costs = replicate(seed, stream_block(120 + i as u64), replicates, |_, rng| {
            independent_pair(rng, params)?.cost()
        })?;
        let est = w2_from_costs(&costs)?;
        let (t, l) = (params.t_star(), params.l_star());
        out.push(CheckResult::z_test(
            format!("independent-oracle T*={t} L*={l}"),
            "E c2 = (1 - exp(-2T*))/(4 T* L*^2) - 1/(2 L*^2) + T*/L*^2",
            est.point,
            crude_and_exact_independent(t, l)?.1,
            est.half_width_95 / Z95,
            SE_MULTIPLIER,
        ));
    }
    Ok(out)
}

/// Largest `|Y - Z~|` over all even rescaled jump times of `draws` random
/// inputs with `n ≤ max_n`.
pub fn synchronous_identity(seed: u64, draws: u64, max_n: usize) -> Result<Vec<CheckResult>> {
    let errs = replicate(seed, stream_block(130), draws, |_, rng| {
        let n = 2 + (rng.unit() * (max_n - 1) as f64) as usize;
        let n = n.min(max_n);
        let v0 = (0.3 + 2.7 * rng.unit()) * if rng.unit() < 0.5 { -1.0 } else { 1.0 };
        let params = ScalingParams::new(
            v0,
            0.2 + 3.8 * rng.unit(),
            0.5 + 2.5 * rng.unit(),
            0.5 + 7.5 * rng.unit(),
        )?;
        let u: Vec<f64> = (0..n).map(|_| rng.exp1()).collect();
        let inputs = SurrogateInputs::new(n, u, params)?;
        let w = inputs.rescaled_gaps();
        let horizon = w.iter().sum::<f64>().max(params.horizon) * 1.01;
        let y = build_y_on(&inputs, horizon)?;
        let z = build_ztilde_on(&inputs, horizon)?;
        let mut t = 0.0;
        let mut worst = 0.0f64;
        for k in 0..n / 2 {
            t += w[2 * k];
            t += w[2 * k + 1];
            worst = worst.max((y.eval(t) - z.eval(t)).abs());
        }
        Ok(worst)
    })?;
    Ok(vec![CheckResult::at_most(
        format!("synchronous-identity draws={draws}"),
        "Y(t) = Z~(t) at every even rescaled jump time",
        errs.into_iter().fold(0.0, f64::max),
        1e-12,
    )])
}

/// Violations of `||x|^p - |y|^p| <= p(|x|^{p-1} + |y|^{p-1})|x - y|` over
/// random real pairs spanning several magnitudes, and the `p = 1` moment gap.
pub fn w_lipschitz(seed: u64, pairs: u64, orders: &[f64]) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (i, &p) in orders.iter().enumerate() {
        let ok = replicate(seed, stream_block(140 + i as u64), pairs, |_, rng| {
            let draw = |rng: &mut RngState| rng.standard_normal() * 10f64.powf(6.0 * rng.unit() - 3.0);
            let x = draw(rng);
            let y = if rng.unit() < 0.1 {
                x + 1e-9 * rng.standard_normal()
            } else {
                draw(rng)
            };
            Ok(w_lipschitz_holds(x, y, p, 1e-12))
        })?;
        let violations = ok.iter().filter(|v| !**v).count();
        out.push(CheckResult::at_most(
            format!("w-lipschitz p={p}"),
            "||x|^p - |y|^p| <= p (|x|^(p-1) + |y|^(p-1)) |x - y|",
            violations as f64,
            0.0,
        ));
    }
    let w2 = 0.3125;
    let gap = moment_gap_bound(1.0, 16.0, 4.0, None, w2)?;
    out.push(CheckResult::at_most(
        "moment-gap p=1",
        "the p = 1 moment gap bound equals 2 w2",
        (gap - 2.0 * w2).abs(),
        0.0,
    ));
    Ok(out)
}

/// Endpoint marginals of the glued chain: the left path must be `L^{-1} X`,
/// the right path Brownian with diffusivity `σ²`.
pub fn chain_marginals(seed: u64, replicates: u64, params: &ScalingParams) -> Result<Vec<CheckResult>> {
    let horizon = params.horizon;
    let ends = replicate(seed, stream_block(150), replicates, |_, rng| {
        let p = chain_pair(rng, params)?;
        Ok((p.left.eval(horizon), p.right.eval(horizon)))
    })?;
    let xs: Vec<f64> = ends.iter().map(|e| e.0).collect();
    let bs: Vec<f64> = ends.iter().map(|e| e.1).collect();
    let (mx, mb) = (
        xs.iter().copied().collect::<Moments>(),
        bs.iter().copied().collect::<Moments>(),
    );
    let l = params.length;
    let t = params.t_star();
    Ok(vec![
        CheckResult::z_test(
            format!("chain-left-mean T*={t}"),
            "E X(T)/L = v0/(2λL) (1 - exp(-2T*))",
            mx.mean(),
            mean_exact(horizon, params) / l,
            mx.se_mean(),
            SE_MULTIPLIER,
        ),
        CheckResult::z_test(
            format!("chain-left-variance T*={t}"),
            "Var X(T)/L = Var X(T) / L^2",
            mx.variance(),
            variance_exact(horizon, params) / (l * l),
            variance_se(&xs),
            SE_MULTIPLIER,
        ),
        CheckResult::z_test(
            format!("chain-right-mean T*={t}"),
            "E B(T) = 0",
            mb.mean(),
            0.0,
            mb.se_mean(),
            SE_MULTIPLIER,
        ),
        CheckResult::z_test(
            format!("chain-right-variance T*={t}"),
            "Var B(T) = σ² T",
            mb.variance(),
            params.sigma2() * horizon,
            variance_se(&bs),
            SE_MULTIPLIER,
        ),
    ])
}

/// The `verify-couplings` suite.
pub fn run_verify_couplings(cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let n = cfg.replicates;
    let points = cfg.sweep.params()?;
    let mut out = coinflip_audit(cfg.seed, n, &COINFLIP_SIZES)?;
    out.extend(independent_oracle(cfg.seed, n, &points)?);
    out.extend(synchronous_identity(cfg.seed, 1000, 50)?);
    out.extend(w_lipschitz(cfg.seed, 10_000, &LIPSCHITZ_ORDERS)?);
    out.extend(chain_marginals(cfg.seed, n, &points[0])?);
    Ok(out)
}
