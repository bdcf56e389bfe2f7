use std::fmt;

/// Every failure surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("time {0} is not a node of the grid")]
    GridAlignment(f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("partitions are not nested: {0}")]
    NotNested(String),
    #[error("partition mesh does not halve: {0}")]
    MeshNotHalving(String),
    #[error("not a control function: {0}")]
    NotAControl(String),
    #[error("convergence diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),
    #[error("integrand and integrator are controlled by different lifts")]
    ReferenceMismatch,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("market weight left the simplex interior: {0}")]
    Boundary(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid mixing measure: {0}")]
    Mixture(String),
    #[error("family constraint violated: {0}")]
    Family(String),
    #[error("numerical instability: {0}")]
    Instability(String),
    #[error("ill-posed estimate: {0}")]
    IllPosed(String),
    #[error("invalid model specification: {0}")]
    Spec(String),
    #[error("{0}")]
    Input(InputError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Malformed input file, with the offending line when known.
#[derive(Debug)]
pub struct InputError {
    pub line: Option<u64>,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl Error {
    pub fn input(line: Option<u64>, message: impl Into<String>) -> Self {
        Error::Input(InputError {
            line,
            message: message.into(),
        })
    }

    /// Failures caused by the numerics rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Instability(_) | Error::IllPosed(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
