use alloc::string::String;

/// Failures reported by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (last change {change:e})")]
    Eigensolver { iterations: usize, change: f64 },

    #[error("non-finite value at cell {cell} after step at t = {time}")]
    NonFinite { cell: usize, time: f64 },

    #[error("CFL violation: dt = {dt} exceeds cell_width / sup|V| = {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("reverse time {t} lies beyond the truncated horizon {limit}")]
    ScoreHorizon { t: f64, limit: f64 },

    #[error("horizon mismatch: expected {expected}, got {got}")]
    HorizonMismatch { expected: f64, got: f64 },

    #[error("mass mismatch: {0:e}")]
    MassMismatch(f64),

    #[error("support violation at cell {cell}: p = {p:e} but q = {q:e}")]
    Support { cell: usize, p: f64, q: f64 },

    #[error("empty particle ensemble")]
    EmptyEnsemble,
}

pub type Result<T> = core::result::Result<T, Error>;
