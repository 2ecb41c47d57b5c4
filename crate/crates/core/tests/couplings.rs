use telecoupler_core::couplings::{coinflip_pair, kmt_pair, synchronous_pair, BranchTag, KmtMode, SynchronousPair};
use telecoupler_core::stats::Moments;
use telecoupler_core::surrogate::{mix_over_poisson, Builder};
use telecoupler_core::telegraph::{mean_exact, variance_exact};
use telecoupler_core::{RngState, ScalingParams};

/// The left coordinate of the coin-flip pair carries the telegraph law, the
/// right one the law of the Poisson mixture of `Y`.
#[test]
fn coinflip_pair_marginals() {
    let params = ScalingParams::from_scaled(6.0, 2.5).unwrap();
    let mut rng = RngState::new(21, 0);
    let (mut left, mut right, mut diag) = (Moments::default(), Moments::default(), Moments::default());
    let t = params.horizon;
    for _ in 0..100_000 {
        let p = coinflip_pair(&mut rng, &params).unwrap();
        left.push(p.left.eval(t));
        right.push(p.right.eval(t));
        diag.push((p.branch_tag == BranchTag::Diagonal) as u8 as f64);
    }
    let l = params.length;
    let mean = mean_exact(t, &params) / l;
    assert!((left.mean() - mean).abs() < 4.0 * left.se_mean());
    let y: Moments = (0..100_000)
        .map(|_| mix_over_poisson(&mut rng, &params, Builder::Y).unwrap().eval(t))
        .collect();
    let se = (right.se_mean().powi(2) + y.se_mean().powi(2)).sqrt();
    assert!((right.mean() - y.mean()).abs() < 4.0 * se);
    assert!((right.variance() / y.variance() - 1.0).abs() < 0.03);
    let var = variance_exact(t, &params) / (l * l);
    assert!((left.variance() / var - 1.0).abs() < 0.03);
    assert!(diag.mean() > 0.0 && diag.mean() < 1.0);
}

/// The walk and its Brownian partner agree at the grid times far better than
/// independent copies would.
#[test]
fn kmt_skeleton_is_close() {
    let params = ScalingParams::from_scaled(400.0, 20.0).unwrap();
    let mut rng = RngState::new(22, 0);
    let mut gaps = Moments::default();
    for _ in 0..200 {
        let (pair, sk) = kmt_pair(&mut rng, &params, KmtMode::Dyadic).unwrap();
        gaps.push(sk.max_gap());
        for (t, b) in sk.grid_times.iter().zip(&sk.brownian) {
            assert_eq!(pair.right.eval(*t), *b);
        }
    }
    let spread = (params.sigma2() * params.horizon).sqrt();
    assert!(gaps.mean() < 0.2 * spread, "{} vs {spread}", gaps.mean());
}

#[test]
fn synchronous_costs_shrink_with_scale() {
    let cost = |t: f64| {
        let params = ScalingParams::from_scaled(t, t.sqrt()).unwrap();
        let mut rng = RngState::new(23, 0);
        (0..400)
            .map(|_| {
                synchronous_pair(&mut rng, &params, SynchronousPair::YvsZ)
                    .unwrap()
                    .cost()
                    .unwrap()
            })
            .collect::<Moments>()
            .mean()
    };
    assert!(cost(256.0) < cost(16.0));
}
