use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("site {site} out of range 0..={max}")]
    SiteOutOfRange { site: usize, max: usize },

    #[error("window [{start}, {start}+{len}) overruns lattice 0..={max}")]
    WindowOutOfRange { start: usize, len: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    ShapeMismatch(String),

    #[error("density mass {available:.6e} does not exceed the cut mass {required:.6e}")]
    MassTooSmall { available: f64, required: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
