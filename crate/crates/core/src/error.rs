use thiserror::Error;

pub type Result<T> = std::result::Result<T, FptError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FptError {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A probability is so close to 1 that the inverse would overflow.
    #[error("saturation: {0}")]
    Saturation(String),

    /// Series truncation or root bracketing did not converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Malformed input data (grids, weights, configs).
    #[error("validation error: {0}")]
    Validation(String),

    /// A solvability assumption of the inverse problem does not hold.
    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl FptError {
    /// Stable short name used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            FptError::Domain(_) => "domain",
            FptError::Saturation(_) => "saturation",
            FptError::Convergence(_) => "convergence",
            FptError::Validation(_) => "validation",
            FptError::Assumption(_) => "assumption",
            FptError::Io(_) => "io",
        }
    }

    /// Process exit code: 2 validation, 3 assumption failure, 4 numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            FptError::Assumption(_) | FptError::Saturation(_) => 3,
            FptError::Convergence(_) => 4,
            FptError::Domain(_) | FptError::Validation(_) | FptError::Io(_) => 2,
        }
    }

    /// Prefix the message with a scenario index, keeping the error kind.
    pub fn in_scenario(self, index: usize) -> Self {
        let wrap = |m: String| format!("scenario {index}: {m}");
        match self {
            FptError::Domain(m) => FptError::Domain(wrap(m)),
            FptError::Saturation(m) => FptError::Saturation(wrap(m)),
            FptError::Convergence(m) => FptError::Convergence(wrap(m)),
            FptError::Validation(m) => FptError::Validation(wrap(m)),
            FptError::Assumption(m) => FptError::Assumption(wrap(m)),
            FptError::Io(m) => FptError::Io(wrap(m)),
        }
    }
}

impl From<std::io::Error> for FptError {
    fn from(e: std::io::Error) -> Self {
        FptError::Io(e.to_string())
    }
}
