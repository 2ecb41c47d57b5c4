//! Brownian completion of a path pinned at grid times.

use crate::error::{ensure, Result};
use crate::path::PiecewisePath;
use crate::randkit::RngState;

/// Number of uniform panels in the default evaluation grid.
pub const DEFAULT_EVAL_PANELS: usize = 1024;

/// `{iT/1024}` merged with `extra` (sorted, inside `[0, T]`).
pub fn default_eval_times(horizon: f64, extra: &[f64]) -> Vec<f64> {
    let uniform: Vec<f64> = (0..=DEFAULT_EVAL_PANELS)
        .map(|i| {
            if i == DEFAULT_EVAL_PANELS {
                horizon
            } else {
                i as f64 * horizon / DEFAULT_EVAL_PANELS as f64
            }
        })
        .collect();
    merge_sorted(&uniform, extra)
}

/// Union of two sorted sequences without exact duplicates.
pub fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i] <= b[j]);
        let v = if take_a {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

/// Samples a Brownian path with diffusivity `sigma2` at `eval_times` given its
/// values at `grid_times`, and returns the linear interpolant through all
/// samples on `[0, horizon]`.
///
/// Between consecutive constraints the samples follow the Brownian bridge,
/// drawn sequentially from the last sampled point; after the last grid time
/// the increments are free. Each grid value is kept exactly.
pub fn brownian_fill(
    grid_times: &[f64],
    grid_values: &[f64],
    sigma2: f64,
    eval_times: &[f64],
    horizon: f64,
    rng: &mut RngState,
) -> Result<PiecewisePath> {
    ensure!(sigma2 >= 0.0 && sigma2.is_finite(), "sigma2 must be non-negative");
    ensure!(
        grid_times.len() == grid_values.len(),
        "grid times and values differ in length"
    );
    ensure!(
        !grid_times.is_empty() && grid_times[0] == 0.0 && grid_values[0] == 0.0,
        "the grid must start at (0, 0)"
    );
    ensure!(
        grid_times.windows(2).all(|w| w[0] < w[1]),
        "grid times must be strictly increasing"
    );
    ensure!(*grid_times.last().unwrap() <= horizon, "grid exceeds the horizon");
    ensure!(
        eval_times.iter().all(|t| (0.0..=horizon).contains(t)),
        "evaluation times must lie in [0, {horizon}]"
    );
    let mut sorted = eval_times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut times = merge_sorted(&merge_sorted(grid_times, &sorted), &[horizon]);
    times.dedup();

    let mut values = Vec::with_capacity(times.len());
    let mut next_grid = 0usize;
    let (mut tp, mut vp) = (0.0, 0.0);
    for &t in &times {
        while next_grid < grid_times.len() && grid_times[next_grid] < t {
            next_grid += 1;
        }
        let v = if next_grid < grid_times.len() && grid_times[next_grid] == t {
            grid_values[next_grid]
        } else if next_grid < grid_times.len() {
            let (tb, vb) = (grid_times[next_grid], grid_values[next_grid]);
            let frac = (t - tp) / (tb - tp);
            let var = sigma2 * (t - tp) * (tb - t) / (tb - tp);
            vp + frac * (vb - vp) + var.sqrt() * rng.standard_normal()
        } else {
            vp + (sigma2 * (t - tp)).sqrt() * rng.standard_normal()
        };
        values.push(v);
        tp = t;
        vp = v;
    }
    PiecewisePath::from_samples(times, values, horizon)
}

/// A free Brownian path started at 0.
pub fn brownian_path(sigma2: f64, eval_times: &[f64], horizon: f64, rng: &mut RngState) -> Result<PiecewisePath> {
    brownian_fill(&[0.0], &[0.0], sigma2, eval_times, horizon, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Moments;

    #[test]
    fn merge() {
        assert_eq!(
            merge_sorted(&[0.0, 1.0, 2.0], &[0.5, 1.0, 3.0]),
            vec![0.0, 0.5, 1.0, 2.0, 3.0]
        );
        let g = default_eval_times(2.0, &[0.001]);
        assert_eq!(g.len(), 1026);
        assert_eq!(*g.last().unwrap(), 2.0);
    }

    #[test]
    fn bridge_mean_and_variance() {
        let mut rng = RngState::new(51, 0);
        let h = 2.0;
        let sigma2 = 1.5;
        let mut mid = Moments::default();
        for _ in 0..200_000 {
            let p = brownian_fill(&[0.0, 1.0, 1.0 + h], &[0.0, 0.7, 0.7], sigma2, &[2.0], 3.0, &mut rng).unwrap();
            mid.push(p.eval(2.0));
            assert_eq!(p.eval(1.0), 0.7);
            assert_eq!(p.eval(3.0), 0.7);
        }
        assert!((mid.mean() - 0.7).abs() < 4.0 * mid.se_mean());
        let target = sigma2 * h / 4.0;
        assert!((mid.variance() - target).abs() < 0.01 * target * 4.0);
    }

    #[test]
    fn zero_noise_is_linear_interpolation() {
        let mut rng = RngState::new(52, 0);
        let p = brownian_fill(&[0.0, 2.0], &[0.0, 4.0], 0.0, &[0.5, 1.0, 3.0], 3.0, &mut rng).unwrap();
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(1.0), 2.0);
        assert_eq!(p.eval(3.0), 4.0);
    }

    #[test]
    fn rejects_bad_input() {
        let mut rng = RngState::new(53, 0);
        assert!(brownian_fill(&[0.0], &[0.0], 1.0, &[1.5], 1.0, &mut rng).is_err());
        assert!(brownian_fill(&[0.1], &[0.0], 1.0, &[0.5], 1.0, &mut rng).is_err());
        assert!(brownian_fill(&[0.0], &[0.0], -1.0, &[0.5], 1.0, &mut rng).is_err());
    }

    #[test]
    fn free_path_marginal() {
        let mut rng = RngState::new(54, 0);
        let times = default_eval_times(4.0, &[]);
        let end: Moments = (0..20_000)
            .map(|_| brownian_path(0.5, &times, 4.0, &mut rng).unwrap().eval(4.0))
            .collect();
        assert!(end.mean().abs() < 4.0 * end.se_mean());
        assert!((end.variance() - 2.0).abs() < 4.0 * 2.0 * (2.0f64 / 20_000.0).sqrt());
    }
}
