use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alphabet mismatch: {0}")]
    Alphabet(String),
    #[error("unknown axis `{0}`")]
    Axis(String),
    #[error("support error: {0}")]
    Support(String),
    #[error("invalid distribution `{name}`: {message}")]
    Distribution { name: String, message: String },
    #[error("validation failed at {field}{}: {message}", index.map(|i| format!("[{i}]")).unwrap_or_default())]
    Validation {
        field: String,
        index: Option<usize>,
        message: String,
    },
    #[error("assumption (I) violated: {0}")]
    AssumptionI(String),
    #[error("enumeration budget exceeded: {what} needs {required}, budget is {budget}")]
    Budget {
        what: String,
        required: u128,
        budget: u128,
    },
    #[error("no convergence after {iterations} iterations (last gap {last_gap:e}): {context}")]
    Convergence {
        iterations: usize,
        last_gap: f64,
        context: String,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("algorithm table does not cover dataset {0}")]
    Coverage(String),
    #[error("decomposition error: {0}")]
    Decomposition(String),
    #[error("missing dependency: {0}")]
    Dependency(String),
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("export failed: {0}")]
    Export(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn validation(field: impl Into<String>, index: Option<usize>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            index,
            message: message.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Export(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Export(e.to_string())
    }
}
