use serde::{Deserialize, Serialize};

/// One named check. Every check reads `pass = statistic <= threshold`
/// (strict for the few checks built with [`CheckResult::below`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub identity: String,
    pub estimate: f64,
    pub target: f64,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Multiplier of the standard error in all Monte Carlo agreement checks.
pub const SE_MULTIPLIER: f64 = 4.0;

impl CheckResult {
    /// `|estimate - target| / se <= k`.
    pub fn z_test(
        name: impl Into<String>,
        identity: impl Into<String>,
        estimate: f64,
        target: f64,
        se: f64,
        k: f64,
    ) -> Self {
        let dev = (estimate - target).abs();
        let statistic = if se > 0.0 {
            dev / se
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            name: name.into(),
            identity: identity.into(),
            estimate,
            target,
            statistic,
            threshold: k,
            pass: statistic <= k,
        }
    }

    /// `value <= bound`.
    pub fn at_most(name: impl Into<String>, identity: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            identity: identity.into(),
            estimate: value,
            target: bound,
            statistic: value,
            threshold: bound,
            pass: value <= bound,
        }
    }

    /// `value < bound`.
    pub fn below(name: impl Into<String>, identity: impl Into<String>, value: f64, bound: f64) -> Self {
        let mut c = Self::at_most(name, identity, value, bound);
        c.pass = value < bound;
        c
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: statistic {:.6} vs threshold {:.6} (estimate {:.6}, target {:.6})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.threshold,
            self.estimate,
            self.target
        )
    }
}

pub fn all_pass(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Base stream id of check block `block`; replicate `r` uses `base + r`.
pub fn stream_block(block: u64) -> u64 {
    block << 40
}
