//! The decoupled process Y, the even-jump walk Z, its time-rescaled version
//! Z̃, and the grid walk S, all driven by one draw `(K = n, u)`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::path::PiecewisePath;
use crate::randkit::{sample_poisson, RngState};
use crate::telegraph::{ScalingParams, WaitingTimes};

/// `(n, u)` with `u` a vector of `n` Exp(1) variates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateInputs {
    pub n: usize,
    pub u: Vec<f64>,
    pub params: ScalingParams,
}

impl SurrogateInputs {
    pub fn new(n: usize, u: Vec<f64>, params: ScalingParams) -> Result<Self> {
        params.validate()?;
        ensure!(u.len() == n, "expected {n} exponential inputs, got {}", u.len());
        ensure!(u.iter().all(|x| *x > 0.0 && x.is_finite()), "inputs must be positive");
        Ok(Self { n, u, params })
    }

    /// Draws `K ~ Po(T★)` and then `K` i.i.d. Exp(1) values.
    pub fn sample(rng: &mut RngState, params: &ScalingParams) -> Result<Self> {
        params.validate()?;
        let n = sample_poisson(rng, params.t_star())? as usize;
        let u = (0..n).map(|_| rng.exp1()).collect();
        Ok(Self { n, u, params: *params })
    }

    /// Rescaled gaps `w_k = (T/n) u_k`.
    pub fn rescaled_gaps(&self) -> Vec<f64> {
        let c = self.params.horizon / self.n as f64;
        self.u.iter().map(|x| c * x).collect()
    }

    /// Physical gaps `s_k = u_k / λ`.
    pub fn physical_gaps(&self) -> Vec<f64> {
        self.u.iter().map(|x| x / self.params.lambda).collect()
    }

    /// Rescaled waiting times with the tail sentinel `2T`.
    pub fn rescaled_waiting_times(&self) -> Result<WaitingTimes> {
        WaitingTimes::new(self.rescaled_gaps(), 2.0 * self.params.horizon)
    }
}

/// Even-jump displacements `η*_k` and the matching physical jump times `t_{2k}(s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkIncrements {
    pub eta_star: Vec<f64>,
    pub even_jump_times: Vec<f64>,
}

pub fn walk_increments(inputs: &SurrogateInputs) -> WalkIncrements {
    let p = &inputs.params;
    let c = p.v0 / p.length;
    let s = inputs.physical_gaps();
    let pairs = inputs.n / 2;
    let mut eta_star = Vec::with_capacity(pairs);
    let mut even_jump_times = Vec::with_capacity(pairs);
    let mut t = 0.0;
    for k in 0..pairs {
        let (a, b) = (s[2 * k], s[2 * k + 1]);
        eta_star.push(-c * (b - a));
        t += a;
        t += b;
        even_jump_times.push(t);
    }
    WalkIncrements {
        eta_star,
        even_jump_times,
    }
}

/// `Y = L^{-1} X(·; (T/n) u)` on `[0, horizon]`; the ray `L^{-1} v0 t` for `n = 0`.
pub fn build_y_on(inputs: &SurrogateInputs, horizon: f64) -> Result<PiecewisePath> {
    let p = &inputs.params;
    if inputs.n == 0 {
        return PiecewisePath::ray(p.v0 / p.length, horizon);
    }
    Ok(inputs
        .rescaled_waiting_times()?
        .to_path(p.v0, horizon)?
        .scaled(1.0 / p.length))
}

pub fn build_y(inputs: &SurrogateInputs) -> Result<PiecewisePath> {
    build_y_on(inputs, inputs.params.horizon)
}

/// Step path with jumps `η*_k` at `t_{2k}(s)`; zero for `n < 2`.
pub fn build_z(inputs: &SurrogateInputs) -> Result<PiecewisePath> {
    let inc = walk_increments(inputs);
    PiecewisePath::step(&inc.even_jump_times, &inc.eta_star, inputs.params.horizon)
}

/// Step path with jumps `(T★/n) η*_k` at the rescaled times `t_{2k}(w)`, on
/// `[0, horizon]`; zero for `n < 2`.
pub fn build_ztilde_on(inputs: &SurrogateInputs, horizon: f64) -> Result<PiecewisePath> {
    if inputs.n < 2 {
        return PiecewisePath::zero(horizon);
    }
    let inc = walk_increments(inputs);
    let w = inputs.rescaled_gaps();
    let c = inputs.params.t_star() / inputs.n as f64;
    let mut times = Vec::with_capacity(inc.eta_star.len());
    let mut t = 0.0;
    for k in 0..inc.eta_star.len() {
        t += w[2 * k];
        t += w[2 * k + 1];
        times.push(t);
    }
    let sizes: Vec<f64> = inc.eta_star.iter().map(|e| c * e).collect();
    PiecewisePath::step(&times, &sizes, horizon)
}

pub fn build_ztilde(inputs: &SurrogateInputs) -> Result<PiecewisePath> {
    build_ztilde_on(inputs, inputs.params.horizon)
}

/// `S(t) = Σ_ℓ η*_ℓ 1{t >= ℓT/ñ}` with `ñ = ⌊n/2⌋` (right-continuous).
pub fn build_grid_walk(increments: &WalkIncrements, n: usize, horizon: f64) -> Result<PiecewisePath> {
    ensure!(n >= 2, "grid walk needs n >= 2");
    let m = n / 2;
    ensure!(
        increments.eta_star.len() == m,
        "expected {m} increments for n={n}, got {}",
        increments.eta_star.len()
    );
    let times: Vec<f64> = grid_times(m, horizon)[1..].to_vec();
    PiecewisePath::step(&times, &increments.eta_star, horizon)
}

/// `{ℓT/m : ℓ = 0..=m}`, with the last point pinned to `T` exactly.
pub fn grid_times(m: usize, horizon: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=m).map(|l| l as f64 * horizon / m as f64).collect();
    g[m] = horizon;
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builder {
    Y,
    Z,
    Ztilde,
    GridWalk,
}

pub fn build(inputs: &SurrogateInputs, builder: Builder) -> Result<PiecewisePath> {
    match builder {
        Builder::Y => build_y(inputs),
        Builder::Z => build_z(inputs),
        Builder::Ztilde => build_ztilde(inputs),
        Builder::GridWalk if inputs.n < 2 => PiecewisePath::zero(inputs.params.horizon),
        Builder::GridWalk => build_grid_walk(&walk_increments(inputs), inputs.n, inputs.params.horizon),
    }
}

/// Samples `K ~ Po(T★)` and `u`, then applies `builder` with `n = K`.
pub fn mix_over_poisson(rng: &mut RngState, params: &ScalingParams, builder: Builder) -> Result<PiecewisePath> {
    let inputs = SurrogateInputs::sample(rng, params)?;
    build(&inputs, builder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Moments;

    fn p(v0: f64, lambda: f64, l: f64, t: f64) -> ScalingParams {
        ScalingParams::new(v0, lambda, l, t).unwrap()
    }

    #[test]
    fn y_examples() {
        let y0 = build_y(&SurrogateInputs::new(0, vec![], p(1.0, 1.0, 1.0, 3.0)).unwrap()).unwrap();
        assert_eq!(y0.eval(2.0), 2.0);
        let y = build_y(&SurrogateInputs::new(2, vec![1.0, 1.0], p(1.0, 1.0, 1.0, 2.0)).unwrap()).unwrap();
        assert_eq!(y.breakpoints(), &[0.0, 1.0, 2.0]);
        assert_eq!(y.eval(2.0), 0.0);
        assert_eq!(y.eval(0.0), 0.0);
    }

    #[test]
    fn z_examples() {
        let params = p(1.0, 1.0, 1.0, 10.0);
        assert_eq!(
            build_z(&SurrogateInputs::new(1, vec![0.7], params).unwrap())
                .unwrap()
                .sup_abs(),
            0.0
        );
        let inputs = SurrogateInputs::new(2, vec![0.5, 1.5], params).unwrap();
        let inc = walk_increments(&inputs);
        assert_eq!(inc.eta_star, vec![-1.0]);
        assert_eq!(inc.even_jump_times, vec![2.0]);
        let z = build_z(&inputs).unwrap();
        assert_eq!(z.eval(1.999), 0.0);
        assert_eq!(z.eval(2.0), -1.0);
    }

    #[test]
    fn ztilde_examples() {
        let params = p(1.0, 2.0, 1.5, 3.0);
        let inputs = SurrogateInputs::new(2, vec![1.0, 1.0], params).unwrap();
        let zt = build_ztilde(&inputs).unwrap();
        assert_eq!(zt.sup_abs(), 0.0);
        let inputs = SurrogateInputs::new(2, vec![0.5, 1.0], params).unwrap();
        let zt = build_ztilde(&inputs).unwrap();
        let eta = walk_increments(&inputs).eta_star[0];
        assert!((zt.eval(2.25) - params.t_star() / 2.0 * eta).abs() < 1e-15);
        assert_eq!(
            build_ztilde(&SurrogateInputs::new(1, vec![1.0], params).unwrap())
                .unwrap()
                .sup_abs(),
            0.0
        );
    }

    #[test]
    fn grid_walk_examples() {
        let inc = WalkIncrements {
            eta_star: vec![-1.0, 1.0],
            even_jump_times: vec![0.0, 0.0],
        };
        let s = build_grid_walk(&inc, 4, 2.0).unwrap();
        assert_eq!(s.eval(0.0), 0.0);
        assert_eq!(s.eval(1.0), -1.0);
        assert_eq!(s.eval(2.0), 0.0);
        assert_eq!(s.sup_abs(), 1.0);
        assert!(build_grid_walk(&inc, 1, 2.0).is_err());
    }

    #[test]
    fn increment_law() {
        let params = p(1.0, 1.0, 2.0, 1.0);
        let mut rng = RngState::new(21, 0);
        let mut m = Moments::default();
        for _ in 0..50_000 {
            let u: Vec<f64> = (0..8).map(|_| rng.exp1()).collect();
            for e in walk_increments(&SurrogateInputs::new(8, u, params).unwrap()).eta_star {
                m.push(e);
            }
        }
        let target = 2.0 / params.l_star().powi(2);
        assert!(m.mean().abs() < 4.0 * m.se_mean());
        assert!((m.variance() - target).abs() < 0.01 * target + 0.0);
    }

    #[test]
    fn poisson_mixing() {
        let params = p(1.0, 1.0, 1.0, 1.0);
        let mut rng = RngState::new(22, 0);
        let mut zeros = 0;
        let draws = 200_000;
        for _ in 0..draws {
            if SurrogateInputs::sample(&mut rng, &params).unwrap().n == 0 {
                zeros += 1;
            }
        }
        let q = (-1.0f64).exp();
        let se = (q * (1.0 - q) / draws as f64).sqrt();
        assert!((zeros as f64 / draws as f64 - q).abs() < 4.0 * se);

        let params = p(1.0, 4.0, 1.0, 1.0);
        let env = (2.0 * params.v0 * params.horizon / params.length).powi(2);
        let ys: Moments = (0..20_000)
            .map(|_| {
                mix_over_poisson(&mut rng, &params, Builder::Y)
                    .unwrap()
                    .eval(1.0)
                    .powi(2)
            })
            .collect();
        assert!(ys.mean().is_finite() && ys.mean() <= env);
        let zs: Moments = (0..50_000)
            .map(|_| mix_over_poisson(&mut rng, &params, Builder::Z).unwrap().eval(0.7))
            .collect();
        assert!(zs.mean().abs() < 4.0 * zs.se_mean());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn inputs() -> impl Strategy<Value = SurrogateInputs> {
            (
                2usize..=50,
                0.3f64..3.0,
                0.2f64..4.0,
                0.5f64..3.0,
                0.5f64..8.0,
                any::<bool>(),
            )
                .prop_flat_map(|(n, v, lam, l, t, neg)| {
                    let params = ScalingParams::new(if neg { -v } else { v }, lam, l, t).unwrap();
                    proptest::collection::vec(0.001f64..6.0, n)
                        .prop_map(move |u| SurrogateInputs::new(n, u, params).unwrap())
                })
        }

        proptest! {
            #[test]
            fn y_matches_ztilde_at_even_rescaled_jumps(inp in inputs()) {
                let w = inp.rescaled_gaps();
                let total: f64 = w.iter().sum();
                let horizon = total.max(inp.params.horizon) * 1.01;
                let y = build_y_on(&inp, horizon).unwrap();
                let zt = build_ztilde_on(&inp, horizon).unwrap();
                let mut t = 0.0;
                for k in 0..inp.n / 2 {
                    t += w[2 * k];
                    t += w[2 * k + 1];
                    prop_assert!((y.eval(t) - zt.eval(t)).abs() < 1e-12);
                }
            }

            #[test]
            fn even_jump_increments_of_physical_path(inp in inputs()) {
                let s = inp.physical_gaps();
                let total: f64 = s.iter().sum();
                let d = WaitingTimes::new(s, 1.0).unwrap();
                let inc = walk_increments(&inp);
                let l = inp.params.length;
                let mut prev = 0.0;
                for (k, t) in inc.even_jump_times.iter().enumerate() {
                    prop_assert!(*t <= total * (1.0 + 1e-12));
                    let x = d.path_eval(*t, inp.params.v0) / l;
                    prop_assert!((x - prev - inc.eta_star[k]).abs() < 1e-10);
                    prev = x;
                }
            }

            #[test]
            fn builders_share_randomness(inp in inputs()) {
                prop_assert_eq!(build_y(&inp).unwrap(), build_y(&inp.clone()).unwrap());
                let z = build_z(&inp).unwrap();
                let inc = walk_increments(&inp);
                let expected: f64 = inc.eta_star.iter().zip(&inc.even_jump_times)
                    .filter(|(_, t)| **t <= inp.params.horizon).map(|(e, _)| e).sum();
                prop_assert!((z.eval(inp.params.horizon) - expected).abs() < 1e-10);
            }
        }
    }
}
