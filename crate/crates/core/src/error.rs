use thiserror::Error;

/// Errors surfaced by the model, metric and optimization layers.
#[derive(Debug, Error)]
pub enum IsacError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range (expected < {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate power: total transmit power is {0} W")]
    DegeneratePower(f64),

    #[error("ill-conditioned Fisher information (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("degenerate expansion point: log argument {0:.3e} is not positive")]
    DegenerateExpansion(f64),

    #[error("power over budget: used {used} W exceeds {budget} W")]
    OverBudget { used: f64, budget: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, IsacError>;
