use thiserror::Error;

/// Errors raised anywhere in the estimation stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("sample is empty or too small: {0}")]
    EmptySample(String),

    #[error("pruning removed every point (tau = {tau})")]
    EmptyAfterPrune { tau: f64 },

    #[error(
        "solver did not converge after {iterations} iterations \
         (primal residual {primal_residual:.3e}, dual residual {dual_residual:.3e}, gap {gap:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        gap: f64,
    },

    #[error("problem size {size} exceeds the dense solver limit {limit}")]
    DimensionGuard { size: usize, limit: usize },

    #[error("k = {k} exceeds the enumeration limit {limit}")]
    EnumerationGuard { k: usize, limit: usize },

    #[error("probability mass overflow: d = {d} exceeds 8n = {}", 8 * n)]
    MassOverflow { d: usize, n: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
