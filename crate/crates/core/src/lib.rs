//! Simulation and verification toolkit for the free velocity flip (telegraph)
//! process and its couplings to Brownian motion.
//!
//! The crate is organised bottom-up:
//!
//! * [`randkit`]: seeded, stream-splittable sampling and exact moment oracles.
//! * [`path`]: exact piecewise-linear / piecewise-constant paths.
//! * [`telegraph`]: the velocity flip path and its closed-form moments.
//! * [`surrogate`]: the decoupled process `Y`, the even-jump walk `Z`, the
//!   rescaled walk `Z~` and the uniform-grid walk `S`.
//! * [`couplings`]: independent, coin-flip, synchronous and strong-approximation
//!   couplings, plus Brownian bridge completion and the glued chain `X -> Y -> Z -> B`.
//! * [`transport`]: the time-averaged quadratic path cost and empirical
//!   Wasserstein brackets.
//! * [`bounds`]: closed-form evaluators of the analytic bounds.
//!
//! All randomness flows through an explicit [`randkit::RngState`] keyed by
//! `(seed, stream_id)`, so replicates can be fanned out to any number of
//! workers and still reproduce bit for bit.

// `!(x <= y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod couplings;
pub mod error;
pub mod path;
pub mod randkit;
pub mod stats;
pub mod surrogate;
pub mod telegraph;
pub mod transport;

pub use error::{Error, Result};
pub use path::{PathKind, PiecewisePath};
pub use randkit::RngState;
pub use telegraph::{ScalingParams, WaitingTimes};
