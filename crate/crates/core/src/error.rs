use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid perturbation at k={k}: perturbed value {value} is outside (0, 1]")]
    InvalidPerturbation { k: usize, value: f64 },

    #[error("series truncation failed after {terms} terms; best error bound {best_bound:e}")]
    Truncation { terms: usize, best_bound: f64 },

    #[error("level n={n} is below the admissible minimum {min}")]
    LevelTooSmall { n: u64, min: u64 },

    #[error("no saddle point for n={n}: support has only {support} indicators")]
    NoSolution { n: u64, support: usize },

    #[error("saddle solver did not converge for n={n} (last residual {residual:e})")]
    SolverStalled { n: u64, residual: f64 },

    #[error("operation not supported for this family: {0}")]
    UnsupportedFamily(String),

    #[error("sequence does not look like the constant-variance regime: {0}")]
    NotRegimeC(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("cannot estimate: {0}")]
    CannotEstimate(String),

    #[error("transfer conditions fail: {0}")]
    TransferInvalid(String),

    #[error("zeta has a pole at s = 1")]
    Pole,

    #[error("unsupported argument: {0}")]
    Unsupported(String),

    #[error("table too short for n={n}: upper correction {correction:e} exceeds tolerance relative to {value:e}")]
    TableTooShort { n: usize, correction: f64, value: f64 },

    #[error("iteration failed to converge: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
