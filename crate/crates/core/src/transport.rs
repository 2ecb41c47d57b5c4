//! The time-averaged quadratic path cost and empirical Wasserstein brackets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::CouplingTag;
use crate::error::{ensure, Result};
use crate::path::PiecewisePath;
use crate::randkit::RngState;
use crate::stats::Moments;

/// Normal 97.5% quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSample {
    pub value: f64,
    pub coupling_tag: CouplingTag,
    pub replicate_id: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub point: f64,
    pub half_width_95: f64,
    pub n_replicates: u64,
}

impl EstimateWithCI {
    pub fn lower(&self) -> f64 {
        self.point - self.half_width_95
    }

    pub fn upper(&self) -> f64 {
        self.point + self.half_width_95
    }

    /// Standard error implied by the half width.
    pub fn se(&self) -> f64 {
        self.half_width_95 / Z95
    }
}

fn check_horizons(left: &PiecewisePath, right: &PiecewisePath, horizon: f64) -> Result<()> {
    ensure!(horizon > 0.0, "horizon must be positive");
    let tol = 1e-12 * horizon;
    ensure!(
        (left.horizon() - horizon).abs() <= tol && (right.horizon() - horizon).abs() <= tol,
        "path horizons {} and {} do not match T={horizon}",
        left.horizon(),
        right.horizon()
    );
    Ok(())
}

/// `(1/T) ∫_0^T (left − right)² dt`, exact for piecewise-linear and step
/// paths: on every interval of the merged breakpoint set the difference is
/// affine, and `∫ (d0 + k s)² ds` over a length `h` is `h (d0² + d0 d1 + d1²)/3`.
pub fn average_quadratic_cost(left: &PiecewisePath, right: &PiecewisePath, horizon: f64) -> Result<f64> {
    check_horizons(left, right, horizon)?;
    let (lb, lv, ls) = (left.breakpoints(), left.values(), left.slopes());
    let (rb, rv, rs) = (right.breakpoints(), right.values(), right.slopes());
    let (mut i, mut j) = (0usize, 0usize);
    let mut a = 0.0;
    let mut acc = 0.0;
    while a < horizon {
        let next_l = lb.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let next_r = rb.get(j + 1).copied().unwrap_or(f64::INFINITY);
        let b = next_l.min(next_r).min(horizon);
        let h = b - a;
        let d0 = (lv[i] + ls[i] * (a - lb[i])) - (rv[j] + rs[j] * (a - rb[j]));
        let d1 = d0 + (ls[i] - rs[j]) * h;
        acc += h * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
        if next_l <= b {
            i += 1;
        }
        if next_r <= b {
            j += 1;
        }
        a = b;
    }
    Ok(acc / horizon)
}

/// Trapezoid-rule version of [`average_quadratic_cost`] on `points` uniform panels.
pub fn trapezoid_cost(left: &PiecewisePath, right: &PiecewisePath, horizon: f64, points: usize) -> Result<f64> {
    check_horizons(left, right, horizon)?;
    ensure!(points >= 1, "need at least one panel");
    let h = horizon / points as f64;
    let times: Vec<f64> = (0..=points).map(|k| k as f64 * h).collect();
    let x = left.eval_sorted(&times);
    let y = right.eval_sorted(&times);
    let mut acc = 0.0;
    for k in 0..=points {
        let d = (x[k] - y[k]).powi(2);
        acc += if k == 0 || k == points { 0.5 * d } else { d };
    }
    Ok(acc * h / horizon)
}

/// `c₂^{p/2}`, the per-pair summand of the `W_p` estimator, `p ∈ [1, 2]`.
pub fn wp_cost(left: &PiecewisePath, right: &PiecewisePath, horizon: f64, p: f64) -> Result<f64> {
    ensure!((1.0..=2.0).contains(&p), "p must lie in [1, 2], got {p}");
    Ok(average_quadratic_cost(left, right, horizon)?.powf(p / 2.0))
}

/// `(mean of c₂^{p/2})^{1/p}` with a delta-method interval.
pub fn wp_from_costs(wp_costs: &[f64], p: f64) -> Result<EstimateWithCI> {
    ensure!((1.0..=2.0).contains(&p), "p must lie in [1, 2], got {p}");
    ensure!(!wp_costs.is_empty(), "need at least one cost sample");
    let m: Moments = wp_costs.iter().copied().collect();
    let mean = m.mean().max(0.0);
    let point = mean.powf(1.0 / p);
    let half = if mean > 0.0 {
        Z95 * m.se_mean() * mean.powf(1.0 / p - 1.0) / p
    } else {
        0.0
    };
    Ok(EstimateWithCI {
        point,
        half_width_95: half,
        n_replicates: wp_costs.len() as u64,
    })
}

/// `sqrt(mean c₂)` with the delta-method interval `1.96 SE / (2 sqrt(mean))`.
pub fn w2_from_costs(costs: &[f64]) -> Result<EstimateWithCI> {
    wp_from_costs(costs, 2.0)
}

/// Evaluates `f` on replicates `0..n` with stream `stream_base + r` for replicate `r`.
/// Results come back in replicate order whatever the thread count.
pub fn replicate<T, F>(seed: u64, stream_base: u64, n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut RngState) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngState::new(seed, stream_base + r);
            f(r, &mut rng)
        })
        .collect()
}

/// Upper estimate of W₂ from any coupling: sample `n_replicates` pairs with
/// `sampler` and return `sqrt(mean c₂)`.
pub fn empirical_w2_upper<F>(seed: u64, stream_base: u64, n_replicates: u64, sampler: F) -> Result<EstimateWithCI>
where
    F: Fn(&mut RngState) -> Result<(PiecewisePath, PiecewisePath)> + Sync,
{
    ensure!(n_replicates >= 100, "need at least 100 replicates, got {n_replicates}");
    let costs = replicate(seed, stream_base, n_replicates, |_, rng| {
        let (l, r) = sampler(rng)?;
        average_quadratic_cost(&l, &r, l.horizon())
    })?;
    w2_from_costs(&costs)
}

/// Normalized trapezoid weights on `grid`; a single point gets weight 1.
pub fn trapezoid_weights(grid: &[f64]) -> Result<Vec<f64>> {
    ensure!(!grid.is_empty(), "grid must be non-empty");
    ensure!(grid.windows(2).all(|w| w[0] < w[1]), "grid must be strictly increasing");
    let g = grid.len();
    if g == 1 {
        return Ok(vec![1.0]);
    }
    let span = grid[g - 1] - grid[0];
    Ok((0..g)
        .map(|k| {
            let lo = if k == 0 { grid[0] } else { grid[k - 1] };
            let hi = if k + 1 == g { grid[g - 1] } else { grid[k + 1] };
            0.5 * (hi - lo) / span
        })
        .collect())
}

/// Lower estimate `sqrt((1/T) ∫ W₂²(law A_t, law B_t) dt)` from samples
/// `a[r][g]`, `b[r][g]` of the two marginal laws on `grid`. At each grid time
/// both columns are sorted and paired rank by rank.
pub fn marginal_w2_lower(a: &[Vec<f64>], b: &[Vec<f64>], grid: &[f64]) -> Result<EstimateWithCI> {
    ensure!(a.len() == b.len(), "sample counts differ: {} vs {}", a.len(), b.len());
    ensure!(!a.is_empty(), "need at least one sample");
    ensure!(
        a.iter().chain(b).all(|row| row.len() == grid.len()),
        "every sample needs one value per grid time"
    );
    let w = trapezoid_weights(grid)?;
    let m = a.len();
    let mut q = vec![0.0; m];
    let mut ca = vec![0.0; m];
    let mut cb = vec![0.0; m];
    for (g, wg) in w.iter().enumerate() {
        for r in 0..m {
            ca[r] = a[r][g];
            cb[r] = b[r][g];
        }
        ca.sort_by(f64::total_cmp);
        cb.sort_by(f64::total_cmp);
        for r in 0..m {
            q[r] += wg * (ca[r] - cb[r]).powi(2);
        }
    }
    w2_from_costs(&q)
}

/// [`marginal_w2_lower`] on paths, evaluated at `grid`.
pub fn empirical_w2_lower(a: &[PiecewisePath], b: &[PiecewisePath], grid: &[f64]) -> Result<EstimateWithCI> {
    ensure!(a.len() == b.len(), "sample counts differ: {} vs {}", a.len(), b.len());
    let ea: Vec<Vec<f64>> = a.iter().map(|p| p.eval_sorted(grid)).collect();
    let eb: Vec<Vec<f64>> = b.iter().map(|p| p.eval_sorted(grid)).collect();
    marginal_w2_lower(&ea, &eb, grid)
}

/// `{kT/(m-1) : k = 0..m}`.
pub fn uniform_grid(horizon: f64, m: usize) -> Vec<f64> {
    assert!(m >= 2);
    let mut g: Vec<f64> = (0..m).map(|k| k as f64 * horizon / (m - 1) as f64).collect();
    g[m - 1] = horizon;
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_examples() {
        let x = PiecewisePath::ray(1.0, 1.0).unwrap();
        let z = PiecewisePath::zero(1.0).unwrap();
        assert_eq!(average_quadratic_cost(&x, &x, 1.0).unwrap(), 0.0);
        assert!((average_quadratic_cost(&x, &z, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let s = PiecewisePath::step(&[0.5], &[1.0], 1.0).unwrap();
        assert!((average_quadratic_cost(&x, &s, 1.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        let other = PiecewisePath::zero(2.0).unwrap();
        assert!(average_quadratic_cost(&x, &other, 1.0).is_err());
        assert!(wp_cost(&x, &z, 1.0, 0.5).is_err());
        assert!((wp_cost(&x, &z, 1.0, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(wp_cost(&x, &x, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn lower_examples() {
        let mut rng = RngState::new(31, 0);
        let m = 100_000;
        let a: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.standard_normal()]).collect();
        let b: Vec<Vec<f64>> = (0..m).map(|_| vec![2.0 * rng.standard_normal()]).collect();
        let est = marginal_w2_lower(&a, &b, &[0.5]).unwrap();
        assert!((est.point - 1.0).abs() < 0.02, "{est:?}");
        assert_eq!(marginal_w2_lower(&a, &a, &[0.5]).unwrap().point, 0.0);
        assert!(marginal_w2_lower(&a, &b[..10], &[0.5]).is_err());
        let w = trapezoid_weights(&[0.0, 1.0, 3.0]).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w, vec![1.0 / 6.0, 0.5, 1.0 / 3.0]);
    }

    #[test]
    fn delta_method_interval() {
        let costs = vec![1.0, 3.0, 1.0, 3.0];
        let e = w2_from_costs(&costs).unwrap();
        assert!((e.point - 2.0f64.sqrt()).abs() < 1e-15);
        let se = (4.0f64 / 3.0 / 4.0).sqrt();
        assert!((e.half_width_95 - Z95 * se / (2.0 * 2.0f64.sqrt())).abs() < 1e-12);
        let zero = w2_from_costs(&[0.0; 5]).unwrap();
        assert_eq!((zero.point, zero.half_width_95), (0.0, 0.0));
    }

    #[test]
    fn replicates_are_ordered_and_reproducible() {
        let a = replicate(5, 100, 50, |r, rng| Ok((r, rng.exp1()))).unwrap();
        let b = replicate(5, 100, 50, |r, rng| Ok((r, rng.exp1()))).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, (r, _))| i as u64 == *r));
        assert!(empirical_w2_upper(1, 0, 99, |_| unreachable!()).is_err());
    }

    mod props {
        use super::super::*;
        use crate::path::PathKind;
        use proptest::prelude::*;

        fn path(h: f64, linear: bool) -> impl Strategy<Value = PiecewisePath> {
            (
                proptest::collection::vec((0.0f64..1.0, -2.0f64..2.0), 0..12),
                -1.0f64..1.0,
            )
                .prop_map(move |(mut pts, s0)| {
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-6);
                    let pts: Vec<(f64, f64)> = pts.into_iter().filter(|p| p.0 > 0.0).collect();
                    let times: Vec<f64> = pts.iter().map(|p| p.0 * h).collect();
                    let sizes: Vec<f64> = pts.iter().map(|p| p.1).collect();
                    if !linear {
                        return PiecewisePath::step(&times, &sizes, h).unwrap();
                    }
                    let mut bp = vec![0.0];
                    let mut vals = vec![0.0];
                    let mut slopes = vec![s0];
                    for (t, s) in times.iter().zip(&sizes) {
                        let v = vals.last().unwrap() + slopes.last().unwrap() * (t - bp.last().unwrap());
                        bp.push(*t);
                        vals.push(v);
                        slopes.push(*s);
                    }
                    PiecewisePath::new(PathKind::Linear, bp, vals, slopes, h).unwrap()
                })
        }

        fn pair() -> impl Strategy<Value = (PiecewisePath, PiecewisePath, f64)> {
            (0.5f64..20.0, any::<bool>(), any::<bool>()).prop_flat_map(|(h, a, b)| (path(h, a), path(h, b), Just(h)))
        }

        fn linear_pair() -> impl Strategy<Value = (PiecewisePath, PiecewisePath, f64)> {
            (0.5f64..20.0).prop_flat_map(|h| (path(h, true), path(h, true), Just(h)))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn exact_matches_fine_trapezoid_on_linear_pairs((l, r, h) in linear_pair()) {
                let exact = average_quadratic_cost(&l, &r, h).unwrap();
                let trap = trapezoid_cost(&l, &r, h, 1 << 16).unwrap();
                prop_assert!((exact - trap).abs() <= 1e-6 * exact.max(1e-6), "{exact} vs {trap}");
            }
        }

        proptest! {
            #[test]
            fn exact_matches_fine_trapezoid_with_jumps((l, r, h) in pair()) {
                let exact = average_quadratic_cost(&l, &r, h).unwrap();
                let trap = trapezoid_cost(&l, &r, h, 1 << 16).unwrap();
                // Each jump costs the trapezoid rule O(h) and there are at most 24.
                let bound = 24.0 * 16.0 / 65536.0;
                prop_assert!((exact - trap).abs() <= bound, "{exact} vs {trap}");
            }

            #[test]
            fn scale_equivariance((l, r, h) in pair(), a in 0.1f64..10.0) {
                let c = average_quadratic_cost(&l, &r, h).unwrap();
                let ca = average_quadratic_cost(&l.scaled(a), &r.scaled(a), h).unwrap();
                prop_assert!((ca - a * a * c).abs() <= 1e-10 * (1.0 + ca));
            }

            #[test]
            fn time_change_identity((l, r, h) in pair()) {
                let c = average_quadratic_cost(&l, &r, h).unwrap();
                let c1 = average_quadratic_cost(&l.time_rescaled(), &r.time_rescaled(), 1.0).unwrap();
                prop_assert!((c - c1).abs() <= 1e-10 * (1.0 + c));
            }
        }
    }
}
