//! Lipschitz-adaptive online learning.
//!
//! Online learning algorithms normally need the Lipschitz constant of the
//! loss stream (the gradient range `G`, or the expert-loss range `L`) as a
//! tuning input. This crate implements second-order methods that learn it
//! on the fly instead:
//!
//! - [`squint`] — expert aggregation over a continuum of learning rates with
//!   clipped losses, evaluated in closed form through Gaussian error
//!   functions.
//! - [`metagrad`] — online convex optimization on a ball with a master
//!   aggregating second-order slave learners over an infinite exponential
//!   learning-rate grid; slaves wake up as the observed scale grows.
//! - [`restart`] — the scale-free wrapper that restarts either learner when
//!   the observed scale outruns its initial estimate, removing the input
//!   scale parameter entirely.
//! - [`projection`] — the ball-constrained Mahalanobis projection solved by
//!   eigendecomposition plus a safeguarded Newton root-find, and the
//!   black-box reduction of arbitrary bounded convex domains to the
//!   enclosing ball.
//! - [`core`] — shared vocabulary: loss/gradient streams, running scale
//!   tracking with clipping, and regret accounting.
//! - [`harness`] — reproducible benchmark environments, baseline
//!   algorithms (Hedge, gradient-norm-adaptive OGD), trace recording and
//!   bound evaluation.

pub mod core;
pub mod harness;
pub mod metagrad;
pub mod numeric;
pub mod projection;
pub mod quadrature;
pub mod restart;
pub mod special;
pub mod squint;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input was NaN or infinite.
    #[error("non-finite input for {context}: {value}")]
    NonFinite { context: &'static str, value: f64 },

    /// Vector length does not match the configured dimension.
    #[error("dimension mismatch for {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A parameter is outside its legal range.
    #[error("invalid parameter {context}: {message}")]
    InvalidParameter {
        context: &'static str,
        message: String,
    },

    /// A root-finding bracket does not straddle the target value.
    #[error("invalid bracket [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}, target={target}")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        target: f64,
    },

    /// Newton iterations exhausted without meeting the residual tolerance.
    #[error(
        "projection root-find failed to converge after {iterations} iterations: \
         residual {residual:.3e} on bracket [{lo:.6e}, {hi:.6e}], \
         metric eigenvalue range [{metric_min:.6e}, {metric_max:.6e}]"
    )]
    ProjectionFailure {
        iterations: u32,
        residual: f64,
        lo: f64,
        hi: f64,
        metric_min: f64,
        metric_max: f64,
    },

    /// The per-slave metric matrix lost positive definiteness.
    #[error("metric matrix not positive definite: minimum eigenvalue {min_eigenvalue:.6e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    /// A comparator refers to data the ledger does not track.
    #[error("unknown comparator: {0}")]
    UnknownComparator(String),

    /// The operation needs at least one completed round.
    #[error("empty trace: {0}")]
    EmptyTrace(&'static str),

    /// An algorithm was paired with an environment of the wrong setting.
    #[error("algorithm/environment mismatch: {algorithm} cannot run on a {environment} stream")]
    SettingMismatch {
        algorithm: String,
        environment: String,
    },

    /// An inline invariant check failed during a verified run.
    #[error("verification failed at round {round}: {check}: {detail}")]
    VerificationFailed {
        check: &'static str,
        round: u64,
        detail: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, context: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { context, value })
    }
}
