use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: String,
        found: String,
    },

    #[error("{what} is not positive definite at k = {k}")]
    NotPositiveDefinite { what: String, k: usize },

    #[error("time index {k} outside {context} (limit {limit})")]
    TimeIndex {
        context: &'static str,
        k: usize,
        limit: usize,
    },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("fusion weights violate the simplex contract: {0}")]
    WeightContract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("trial {trial}, k = {k}: {source}")]
    Trial {
        trial: usize,
        k: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn dims(context: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::Dimension {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for failures raised by the numerical kernels rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) | Error::NotPositiveDefinite { .. } => true,
            Error::Trial { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
