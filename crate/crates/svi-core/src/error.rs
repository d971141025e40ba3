use thiserror::Error;

/// Crate-wide error type. Operations that can fail return `Result<T, SviError>`.
#[derive(Debug, Error)]
pub enum SviError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} must be positive (got {value})")]
    NonPositive { what: &'static str, value: f64 },

    #[error("empty time grid")]
    EmptyGrid,

    #[error("time {t} outside valid range [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("window [{s}, {t}] is empty or exits the stored range")]
    BadWindow { s: f64, t: f64 },

    #[error("non-monotone time: {t} does not extend grid ending at {last}")]
    NonMonotoneTime { t: f64, last: f64 },

    #[error("resolvent Newton iteration did not converge: residual {residual:.3e} after {iters} iterations")]
    NewtonNoConvergence { residual: f64, iters: usize },

    #[error("explicit Yosida step rejected: dt = {dt} exceeds penalty parameter eps = {eps}")]
    StiffStep { dt: f64, eps: f64 },

    #[error("dt = {dt} does not resolve the t/eps oscillation (rate {rate}, eps {eps})")]
    UnresolvedOscillation { dt: f64, rate: f64, eps: f64 },

    #[error("non-finite value produced by {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("simulation aborted at t = {t}: {reason}")]
    Aborted {
        t: f64,
        reason: String,
        /// trajectory up to the failing step, for debugging
        partial: Option<Box<crate::paths::CadlagPath>>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SviError>;
