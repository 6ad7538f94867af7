//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum QptError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not hermitian (max |A - A^dag| element = {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("Fock truncation inadequate at cutoff {cutoff}: {context} = {value:.3e} exceeds {limit:.3e}")]
    Truncation {
        context: String,
        value: f64,
        limit: f64,
        cutoff: usize,
    },

    #[error("state norm drifted by {drift:.3e} at t = {t:.6e} (limit {limit:.1e}); step policy inadequate")]
    NormDrift { drift: f64, limit: f64, t: f64 },

    #[error("density-matrix trace drifted by {drift:.3e} at t = {t:.6e} (limit {limit:.1e})")]
    TraceDrift { drift: f64, limit: f64, t: f64 },

    #[error("sideband detuning {delta:.6e} rad/s reaches the trap frequency {nu:.6e} rad/s; no vibrational rotating-wave margin")]
    RwaMargin { delta: f64, nu: f64 },

    #[error("malformed laser schedule: {0}")]
    MalformedSchedule(String),

    #[error("equilibrium rescaling undefined at the critical point (|g-1| = {0:.3e} < 1e-6)")]
    AtCriticalPoint(f64),

    #[error("curves share no abscissa overlap")]
    EmptyIntersection,

    #[error("fit needs at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("log-log fit requires positive data (found {0:.6e})")]
    NonPositiveData(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, QptError>;
