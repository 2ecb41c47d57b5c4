//! Moment identities and bounds for the telegraph path, the simplex measure,
//! and the Poisson, Gamma and Laplace laws.

use telecoupler_core::randkit::{
    gamma_uniform_decomposition, poisson_inverse_moment_bound, poisson_pairing_bounds, sample_gamma, sample_poisson,
    sample_simplex, simplex_cross_moment, simplex_exp_moment, simplex_exp_moment_bound, simplex_max_bound,
    simplex_moment_oracle,
};
use telecoupler_core::stats::{variance_se, Moments};
use telecoupler_core::surrogate::{walk_increments, SurrogateInputs};
use telecoupler_core::telegraph::{abs_moment_bound, default_c_r, mean_exact, sample_telegraph, variance_exact};
use telecoupler_core::transport::replicate;
use telecoupler_core::ScalingParams;

use crate::checks::{stream_block, CheckResult, SE_MULTIPLIER};
use crate::config::ExperimentConfig;
use crate::error::Result;

pub const MOMENT_TIMES: [f64; 3] = [0.25, 1.0, 4.0];
pub const SIMPLEX_SIZES: [usize; 4] = [2, 3, 10, 100];
pub const POISSON_RATES: [f64; 3] = [2.0, 5.0, 20.0];

fn moments_of(xs: impl IntoIterator<Item = f64>) -> Moments {
    xs.into_iter().collect()
}

/// Mean and variance of `X(t)` at `(v0, λ) = (1, 1)` against the closed
/// forms, and `E|X(t)|^r` against the absolute-moment bound, `r ∈ {1, 2, 4}`.
pub fn telegraph_checks(seed: u64, paths: u64) -> Result<Vec<CheckResult>> {
    let params = ScalingParams::new(1.0, 1.0, 1.0, 4.0)?;
    let samples = replicate(seed, stream_block(1), paths, |_, rng| {
        let p = sample_telegraph(rng, &params, false)?;
        Ok(MOMENT_TIMES.map(|t| p.eval(t)))
    })?;
    let mut out = Vec::new();
    for (i, &t) in MOMENT_TIMES.iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|s| s[i]).collect();
        let m = moments_of(xs.iter().copied());
        out.push(CheckResult::z_test(
            format!("telegraph-mean t={t}"),
            "E X(t) = v0/(2λ) (1 - exp(-2λt))",
            m.mean(),
            mean_exact(t, &params),
            m.se_mean(),
            SE_MULTIPLIER,
        ));
        out.push(CheckResult::z_test(
            format!("telegraph-variance t={t}"),
            "Var X(t) = (v0/λ)^2 (λt + exp(-2λt) - exp(-4λt)/4 - 3/4)",
            m.variance(),
            variance_exact(t, &params),
            variance_se(&xs),
            SE_MULTIPLIER,
        ));
        for r in [1.0, 2.0, 4.0] {
            let c_r = default_c_r(r).expect("calibrated order");
            let e = moments_of(xs.iter().map(|x| x.abs().powf(r))).mean();
            out.push(CheckResult::at_most(
                format!("abs-moment-bound r={r} t={t}"),
                "E|X(t)|^r <= min{|v0|^r (C~(r) λ^(-r/2) t^(r/2) + C(r) λ^(-r/2-1) t^(r/2-1)), |v0|^r t^r}",
                e,
                abs_moment_bound(t, r, &params, c_r),
            ));
        }
    }
    Ok(out)
}

/// Coordinate moments of the uniform simplex law for each size in `sizes`,
/// `⟨max u_i⟩` against its logarithmic bound for each size in `max_sizes`, and
/// the exponential moment bound evaluated by quadrature.
pub fn simplex_checks(
    seed: u64,
    draws: u64,
    sizes: &[usize],
    max_draws: u64,
    max_sizes: &[usize],
) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let samples = replicate(seed, stream_block(10 + i as u64), draws, |_, rng| {
            let u = sample_simplex(rng, n)?;
            let u = u.as_slice();
            Ok([u[0], u[0] * u[0], u[0].powi(3), if n >= 2 { u[0] * u[1] } else { 0.0 }])
        })?;
        for (p, label) in [(1u32, "u_i"), (2, "u_i^2"), (3, "u_i^3")] {
            let m = moments_of(samples.iter().map(|s| s[p as usize - 1]));
            out.push(CheckResult::z_test(
                format!("simplex-moment p={p} n={n}"),
                format!("<{label}> = p! (n-1)! / (n+p-1)!"),
                m.mean(),
                simplex_moment_oracle(n, p),
                m.se_mean(),
                SE_MULTIPLIER,
            ));
        }
        if n >= 2 {
            let m = moments_of(samples.iter().map(|s| s[3]));
            out.push(CheckResult::z_test(
                format!("simplex-cross-moment n={n}"),
                "<u_i u_j> = 1/(n(n+1)), i != j",
                m.mean(),
                simplex_cross_moment(n),
                m.se_mean(),
                SE_MULTIPLIER,
            ));
        }
    }
    for (i, &n) in max_sizes.iter().enumerate() {
        let maxima = replicate(seed, stream_block(30 + i as u64), max_draws, |_, rng| {
            Ok(sample_simplex(rng, n)?.as_slice().iter().copied().fold(0.0, f64::max))
        })?;
        out.push(CheckResult::at_most(
            format!("simplex-max n={n}"),
            "<max u_i> <= max{6, 4 ln 3/ln 2} ln(n+1)/n",
            moments_of(maxima).mean(),
            simplex_max_bound(n),
        ));
    }
    for n in [2usize, 10, 100, 1000] {
        out.push(CheckResult::at_most(
            format!("simplex-exp-moment n={n}"),
            "<exp((n-1) u_1)> <= 3 sqrt(n-1)",
            simplex_exp_moment(n, (n - 1) as f64),
            simplex_exp_moment_bound(n),
        ));
    }
    Ok(out)
}

/// Poisson mass and moments, the inverse-moment bound and the pairing bound.
pub fn poisson_checks(seed: u64, draws: u64, rates: &[f64]) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let k4 = replicate(seed, stream_block(50), draws, |_, rng| {
        Ok(sample_poisson(rng, 4.0)? as f64)
    })?;
    let m = moments_of(k4.iter().map(|k| (*k == 0.0) as u8 as f64));
    out.push(CheckResult::z_test(
        "poisson-zero-mass mean=4",
        "P(K = 0) = exp(-λ)",
        m.mean(),
        (-4.0f64).exp(),
        m.se_mean(),
        SE_MULTIPLIER,
    ));
    let k1 = replicate(seed, stream_block(51), draws, |_, rng| {
        Ok(sample_poisson(rng, 1.0)? as f64)
    })?;
    let m1 = moments_of(k1.iter().copied());
    let m2 = moments_of(k1.iter().map(|k| k * k));
    out.push(CheckResult::z_test(
        "poisson-mean mean=1",
        "E K = λ",
        m1.mean(),
        1.0,
        m1.se_mean(),
        SE_MULTIPLIER,
    ));
    out.push(CheckResult::z_test(
        "poisson-second-moment mean=1",
        "E K^2 = λ^2 + λ",
        m2.mean(),
        2.0,
        m2.se_mean(),
        SE_MULTIPLIER,
    ));
    for (i, &lambda) in rates.iter().enumerate() {
        let ks = replicate(seed, stream_block(52 + i as u64), draws, |_, rng| {
            sample_poisson(rng, lambda)
        })?;
        let inv = moments_of(ks.iter().map(|&k| if k >= 1 { 1.0 / k as f64 } else { 0.0 }));
        out.push(CheckResult::at_most(
            format!("poisson-inverse-moment λ={lambda}"),
            "<N^-1 1{N >= 1}> <= 2^(3/2)/λ",
            inv.mean(),
            poisson_inverse_moment_bound(lambda, 1.0),
        ));
        let pair = moments_of(ks.iter().map(|&k| {
            if k >= 2 {
                (2.0 * (k / 2) as f64 / lambda - 1.0).powi(2)
            } else {
                0.0
            }
        }));
        out.push(CheckResult::at_most(
            format!("poisson-pairing λ={lambda}"),
            "<(2 floor(N/2)/λ - 1)^2 1{N >= 2}> <= 35/λ",
            pair.mean(),
            poisson_pairing_bounds(lambda).1,
        ));
    }
    Ok(out)
}

/// Gamma moments and the uniform/Gamma split of an exponential pair.
pub fn gamma_checks(seed: u64, draws: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let rate = 1.5;
    let ys = replicate(seed, stream_block(60), draws, |_, rng| sample_gamma(rng, 2, rate))?;
    let m4 = moments_of(ys.iter().map(|y| y.powi(4)));
    out.push(CheckResult::z_test(
        "gamma-fourth-moment shape=2",
        "E Y^k = θ^-k (m+k-1)!/(m-1)!",
        m4.mean(),
        120.0 / rate.powi(4),
        m4.se_mean(),
        SE_MULTIPLIER,
    ));
    let pairs = replicate(seed, stream_block(61), draws, |_, rng| {
        let (a, b) = (rng.exp1(), rng.exp1());
        gamma_uniform_decomposition(a, b)
    })?;
    let x = moments_of(pairs.iter().map(|p| p.0));
    let x2 = moments_of(pairs.iter().map(|p| p.0 * p.0));
    let y = moments_of(pairs.iter().map(|p| p.1));
    out.push(CheckResult::z_test(
        "split-uniform-mean",
        "(u-v)/(u+v) ~ U[-1, 1]",
        x.mean(),
        0.0,
        x.se_mean(),
        SE_MULTIPLIER,
    ));
    out.push(CheckResult::z_test(
        "split-uniform-second-moment",
        "(u-v)/(u+v) ~ U[-1, 1]",
        x2.mean(),
        1.0 / 3.0,
        x2.se_mean(),
        SE_MULTIPLIER,
    ));
    out.push(CheckResult::z_test(
        "split-gamma-mean",
        "u+v ~ Gamma(2, 1)",
        y.mean(),
        2.0,
        y.se_mean(),
        SE_MULTIPLIER,
    ));
    let corr = {
        let (mx, my) = (x.mean(), y.mean());
        let cov = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pairs.len() as f64;
        cov / (x.std_dev() * y.std_dev())
    };
    out.push(CheckResult::z_test(
        "split-independence",
        "(u-v)/(u+v) and u+v are independent",
        corr,
        0.0,
        1.0 / (pairs.len() as f64).sqrt(),
        SE_MULTIPLIER,
    ));
    Ok(out)
}

/// Mean and variance of the even-jump increments `η*` at each sweep point.
pub fn laplace_checks(seed: u64, draws: u64, points: &[ScalingParams]) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (i, params) in points.iter().enumerate() {
        let etas = replicate(seed, stream_block(70 + i as u64), draws, |_, rng| {
            let inputs = SurrogateInputs::new(2, vec![rng.exp1(), rng.exp1()], *params)?;
            Ok(walk_increments(&inputs).eta_star[0])
        })?;
        let m = moments_of(etas.iter().copied());
        let t = params.t_star();
        out.push(CheckResult::z_test(
            format!("laplace-mean T*={t}"),
            "E η* = 0",
            m.mean(),
            0.0,
            m.se_mean(),
            SE_MULTIPLIER,
        ));
        out.push(CheckResult::z_test(
            format!("laplace-variance T*={t}"),
            "Var η* = 2/L*^2",
            m.variance(),
            2.0 / params.l_star().powi(2),
            variance_se(&etas),
            SE_MULTIPLIER,
        ));
    }
    Ok(out)
}

/// The `verify-moments` suite.
pub fn run_verify_moments(cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let n = cfg.replicates;
    let max_sizes: Vec<usize> = (0..=10).map(|k| 1usize << k).collect();
    let mut out = telegraph_checks(cfg.seed, n)?;
    out.extend(simplex_checks(
        cfg.seed,
        n,
        &SIMPLEX_SIZES,
        (n / 10).max(100),
        &max_sizes,
    )?);
    out.extend(poisson_checks(cfg.seed, n, &POISSON_RATES)?);
    out.extend(gamma_checks(cfg.seed, n)?);
    out.extend(laplace_checks(cfg.seed, n, &cfg.sweep.params()?)?);
    Ok(out)
}
