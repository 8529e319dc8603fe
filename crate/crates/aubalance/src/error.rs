use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad or empty input data (maps to exit code 2).
    #[error("input error: {0}")]
    Input(String),

    /// Malformed file contents (maps to exit code 2).
    #[error("format error: {0}")]
    Format(String),

    /// Vector length mismatch between a problem and a count vector.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A count vector outside the feasible box, or invalid config values.
    #[error("domain error: {0}")]
    Domain(String),

    /// Settings that cannot yield any feasible solution (maps to exit code 3).
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// Brute-force search space exceeds the enumeration guard.
    #[error("search space too large: {0}")]
    SearchSpace(String),

    /// A plan and the table/problem it claims to describe disagree.
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
