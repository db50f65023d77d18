use thiserror::Error;

/// Errors raised by the simulator and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid register, model, kick or evolution parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Config file failed schema validation; one entry per offending field.
    #[error("schema error: {}", .0.join("; "))]
    Schema(Vec<String>),

    /// Inputs outside the validity domain of a closed-form expression.
    #[error("domain error: {0}")]
    Domain(String),

    /// Numerical breakdown (norm drift, quadrature failure, non-convergence).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Broken internal invariant.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Schema(_) => 2,
            Error::Domain(_) => 3,
            Error::Numerical(_) => 4,
            Error::Internal(_) => 5,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 6,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Schema(_) => "schema",
            Error::Domain(_) => "domain",
            Error::Numerical(_) => "numerical",
            Error::Internal(_) => "internal",
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
