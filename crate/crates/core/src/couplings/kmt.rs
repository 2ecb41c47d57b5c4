//! Couplings of i.i.d. Laplace(1) increments `ξ_k` (variance 2) with i.i.d.
//! N(0, 2) increments `g_k`, leaving the law of `ξ` untouched.
//!
//! * [`KmtMode::Quantile`] maps each increment through its own CDF.
//! * [`KmtMode::Dyadic`] first matches the total sum by quantiles, then
//!   recursively splits every block in two and matches the conditional law of
//!   the left half-sum given the block sum.
//!
//! The law of a sum of `m` Laplace(1) variables has the closed form
//! `f_m(x) = e^{-|x|} Σ_{k<m} c_{m,k} |x|^k` with
//! `c_{m,k} = C(2m-2-k, m-1) 2^{-(2m-1-k)} / k!`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KmtMode {
    Quantile,
    Dyadic,
}

/// Standard normal quantile from whichever tail is more accurate.
/// `lower + upper` need not be exactly 1.
fn normal_quantile(lower: f64, upper: f64) -> f64 {
    const TINY: f64 = 1e-300;
    if lower <= upper {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * lower.max(TINY))
    } else {
        std::f64::consts::SQRT_2 * erfc_inv(2.0 * upper.max(TINY))
    }
}

/// Gaussian partner `√2 Φ^{-1}(F(ξ))` of a single Laplace(1) increment.
pub fn laplace_to_gaussian(xi: f64) -> f64 {
    if xi < 0.0 {
        -2.0 * erfc_inv(xi.exp())
    } else {
        2.0 * erfc_inv((-xi).exp())
    }
}

/// Laplace(1) CDF.
pub fn laplace_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * x.exp()
    } else {
        1.0 - 0.5 * (-x).exp()
    }
}

fn logsumexp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

const TABLE_POINTS: usize = 1 << 14;
const EXACT_MAX_M: usize = 8;

struct Table {
    lo: f64,
    step: f64,
    log_f: Vec<f64>,
}

/// The law of `ξ_1 + ... + ξ_m`.
pub struct LaplaceSum {
    m: usize,
    ln_c: Vec<f64>,
    ln_d: Vec<f64>,
    table: Option<Table>,
}

impl LaplaceSum {
    fn new(m: usize) -> Self {
        assert!(m >= 1);
        let lg = |x: usize| ln_gamma(x as f64 + 1.0);
        let ln2 = std::f64::consts::LN_2;
        // ln(c_k k!) = ln C(2m-2-k, m-1) - (2m-1-k) ln 2
        let ln_ck_fact: Vec<f64> = (0..m)
            .map(|k| lg(2 * m - 2 - k) - lg(m - 1) - lg(m - 1 - k) - (2 * m - 1 - k) as f64 * ln2)
            .collect();
        let ln_c: Vec<f64> = (0..m).map(|k| ln_ck_fact[k] - lg(k)).collect();
        // D_j = Σ_{k>=j} c_k k!, accumulated from the top.
        let mut ln_d = vec![f64::NEG_INFINITY; m];
        let mut acc = f64::NEG_INFINITY;
        for k in (0..m).rev() {
            let (hi, lo) = if acc > ln_ck_fact[k] {
                (acc, ln_ck_fact[k])
            } else {
                (ln_ck_fact[k], acc)
            };
            acc = hi + (lo - hi).exp().ln_1p();
            ln_d[k] = acc;
        }
        let mut law = Self {
            m,
            ln_c,
            ln_d,
            table: None,
        };
        if m > EXACT_MAX_M {
            let half = m as f64 + 40.0 + 10.0 * (2.0 * m as f64).sqrt();
            let step = 2.0 * half / (TABLE_POINTS - 1) as f64;
            let log_f = (0..TABLE_POINTS)
                .map(|i| law.log_density_exact(-half + i as f64 * step))
                .collect();
            law.table = Some(Table { lo: -half, step, log_f });
        }
        law
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `ln f_m(x)` from the closed form. The terms `c_k |x|^k` are unimodal in
    /// `k`, so only the band around the peak is summed.
    pub fn log_density_exact(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax == 0.0 {
            return self.ln_c[0];
        }
        let la = ax.ln();
        let term = |k: usize| self.ln_c[k] + k as f64 * la;
        // Ratio of consecutive terms is 2|x|(m-1-k)/((2m-2-k)(k+1)), decreasing in k.
        let (mut lo, mut hi) = (0usize, self.m - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if term(mid + 1) > term(mid) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let peak = term(lo);
        let mut s = 1.0;
        let mut k = lo;
        while k > 0 {
            k -= 1;
            let r = (term(k) - peak).exp();
            s += r;
            if r < 1e-18 {
                break;
            }
        }
        for k in lo + 1..self.m {
            let r = (term(k) - peak).exp();
            s += r;
            if r < 1e-18 {
                break;
            }
        }
        peak + s.ln() - ax
    }

    /// `ln f_m(x)`, by Catmull-Rom interpolation on the tabulated log-density
    /// when available and in range.
    pub fn log_density(&self, x: f64) -> f64 {
        let Some(t) = &self.table else {
            return self.log_density_exact(x);
        };
        let pos = (x - t.lo) / t.step;
        let i = pos.floor();
        if i < 1.0 || i >= (TABLE_POINTS - 3) as f64 {
            return self.log_density_exact(x);
        }
        let i = i as usize;
        let u = pos - i as f64;
        let (p0, p1, p2, p3) = (t.log_f[i - 1], t.log_f[i], t.log_f[i + 1], t.log_f[i + 2]);
        p1 + 0.5 * u * (p2 - p0 + u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + u * (3.0 * (p1 - p2) + p3 - p0)))
    }

    /// `(P(S <= x), P(S > x))`, each from its own series so both tails keep
    /// full relative precision. For `x >= 0`,
    /// `P(S > x) = e^{-x} Σ_j D_j x^j / j!` with `D_j = Σ_{k>=j} c_k k!`.
    pub fn cdf_pair(&self, x: f64) -> (f64, f64) {
        let ax = x.abs();
        let tail = if ax == 0.0 {
            self.ln_d[0].exp()
        } else {
            let la = ax.ln();
            let terms: Vec<f64> = (0..self.m)
                .map(|j| self.ln_d[j] + j as f64 * la - ln_gamma(j as f64 + 1.0) - ax)
                .collect();
            logsumexp(&terms).exp()
        };
        let tail = tail.min(0.5);
        if x >= 0.0 {
            (1.0 - tail, tail)
        } else {
            (tail, 1.0 - tail)
        }
    }
}

type LawCache = Mutex<HashMap<usize, Arc<LaplaceSum>>>;

fn cache() -> &'static LawCache {
    static CACHE: OnceLock<LawCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared, lazily built law of the sum of `m` Laplace(1) variables.
pub fn laplace_sum(m: usize) -> Arc<LaplaceSum> {
    if let Some(law) = cache().lock().unwrap().get(&m) {
        return law.clone();
    }
    // Build outside the lock; a racing duplicate build is harmless.
    let law = Arc::new(LaplaceSum::new(m));
    cache().lock().unwrap().entry(m).or_insert(law).clone()
}

fn gauss_legendre_16() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = 16usize;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

const MASS_TOL: f64 = 1e-6;
const LOG_DROP: f64 = 46.0;

/// `(P(S_a <= x | S_{a+b} = s), P(S_a > x | S_{a+b} = s))`.
pub fn conditional_cdf_pair(a: usize, b: usize, s: f64, x: f64) -> Result<(f64, f64)> {
    if a == 1 && b == 1 {
        return Ok(pair_conditional(s, x));
    }
    let fa = laplace_sum(a);
    let fb = laplace_sum(b);
    let m = (a + b) as f64;
    let logp = |y: f64| fa.log_density(y) + fb.log_density(s - y);
    let mu = s * a as f64 / m;
    let sd = (2.0 * (a * b) as f64 / m).sqrt();

    // The integrand is log-concave: march out from the centre until it has
    // dropped far below the largest value seen.
    let mut top = logp(mu);
    let march = |start: f64, dir: f64, top: &mut f64| {
        let mut y = start;
        loop {
            y += dir * sd;
            let v = logp(y);
            *top = top.max(v);
            if v < *top - LOG_DROP {
                return y;
            }
        }
    };
    let mut hi = march(mu, 1.0, &mut top);
    let mut lo = march(mu, -1.0, &mut top);
    if x >= hi {
        let mut t = logp(x);
        hi = march(x, 1.0, &mut t);
    }
    if x <= lo {
        let mut t = logp(x);
        lo = march(x, -1.0, &mut t);
    }

    let mut cuts = vec![lo, hi, x];
    for c in [0.0, s] {
        if c > lo && c < hi {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let gl = gauss_legendre_16();
    let (mut below, mut above) = (0.0, 0.0);
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let panels = ((q - p) / (3.0 * sd)).ceil().max(1.0) as usize;
        let h = (q - p) / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let c = p + (k as f64 + 0.5) * h;
            for &(node, weight) in gl {
                acc += weight * (logp(c + 0.5 * h * node) - top).exp();
            }
        }
        acc *= 0.5 * h;
        if q <= x {
            below += acc;
        } else {
            above += acc;
        }
    }
    let total = below + above;
    let mass = total.ln() + top;
    let expected = laplace_sum(a + b).log_density(s);
    let defect = (mass - expected).exp_m1().abs();
    if !(defect <= MASS_TOL) {
        return Err(Error::NumericResolution(format!(
            "conditional law of S_{a} given S_{} = {s}: mass defect {defect:.3e}",
            a + b
        )));
    }
    Ok((below / total, above / total))
}

/// Closed form for two increments: the conditional density of `ξ_1` given
/// `ξ_1 + ξ_2 = s >= 0` is proportional to `e^{2x}`, `1`, `e^{2(s-x)}` on
/// `x < 0`, `[0, s]`, `x > s`, with total `1 + s` after scaling.
fn pair_conditional(s: f64, x: f64) -> (f64, f64) {
    if s < 0.0 {
        let (lo, hi) = pair_conditional(-s, -x);
        return (hi, lo);
    }
    let z = 1.0 + s;
    if x < 0.0 {
        let lower = 0.5 * (2.0 * x).exp() / z;
        (lower, 1.0 - lower)
    } else if x <= s {
        ((0.5 + x) / z, (0.5 + s - x) / z)
    } else {
        let upper = 0.5 * (-2.0 * (x - s)).exp() / z;
        (1.0 - upper, upper)
    }
}

/// Gaussian partners `g_k ~ N(0, 2)` of the Laplace(1) increments `xi`.
pub fn couple_increments(xi: &[f64], mode: KmtMode) -> Result<Vec<f64>> {
    match mode {
        KmtMode::Quantile => Ok(xi.iter().map(|&x| laplace_to_gaussian(x)).collect()),
        KmtMode::Dyadic => {
            let mut g = vec![0.0; xi.len()];
            if xi.is_empty() {
                return Ok(g);
            }
            let total: f64 = xi.iter().sum();
            let m = xi.len();
            let (lower, upper) = if m == 1 {
                (laplace_cdf(total), 1.0 - laplace_cdf(total))
            } else {
                laplace_sum(m).cdf_pair(total)
            };
            let root = (2.0 * m as f64).sqrt() * normal_quantile(lower, upper);
            split(xi, total, root, &mut g)?;
            Ok(g)
        }
    }
}

fn split(xi: &[f64], sum: f64, gsum: f64, out: &mut [f64]) -> Result<()> {
    let m = xi.len();
    if m == 1 {
        out[0] = gsum;
        return Ok(());
    }
    let a = m / 2;
    let b = m - a;
    let left: f64 = xi[..a].iter().sum();
    let (lower, upper) = conditional_cdf_pair(a, b, sum, left)?;
    let mf = m as f64;
    let ga = gsum * a as f64 / mf + (2.0 * (a * b) as f64 / mf).sqrt() * normal_quantile(lower, upper);
    let (oa, ob) = out.split_at_mut(a);
    split(&xi[..a], left, ga, oa)?;
    split(&xi[a..], sum - left, gsum - ga, ob)
}

/// Partial sums `S_0 = 0, S_1, ..., S_n`.
pub fn partial_sums(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 1);
    let mut s = 0.0;
    out.push(s);
    for v in x {
        s += v;
        out.push(s);
    }
    out
}

/// `max_m |S_m − G_m| / √2`: the partial-sum gap in units of one increment's
/// standard deviation.
pub fn max_partial_sum_gap(xi: &[f64], g: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut t = 0.0;
    let mut best: f64 = 0.0;
    for (a, b) in xi.iter().zip(g) {
        s += a;
        t += b;
        best = best.max((s - t).abs());
    }
    best / std::f64::consts::SQRT_2
}
