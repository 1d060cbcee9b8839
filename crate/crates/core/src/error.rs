use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported constellation: {0}")]
    Constellation(String),

    #[error("invalid scenario field `{field}`: {reason}")]
    Scenario { field: String, reason: String },

    #[error("enumeration cap exceeded: {needed} entries requested, limit is {limit}")]
    CapExceeded { needed: u128, limit: u64 },

    #[error("sample count must be at least 1")]
    ZeroSamples,

    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: u64, size: u64 },

    #[error("operation requires a single-antenna single-stream scenario")]
    NotSiso,

    #[error("singular channel block {0}")]
    SingularChannel(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no precoder set passed verification after {attempts} attempts")]
    VerificationFailed { attempts: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("malformed scenario JSON at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn scenario(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Scenario {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by problem size or numerical degeneracy
    /// rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CapExceeded { .. }
                | Error::SingularChannel(_)
                | Error::VerificationFailed { .. }
        )
    }
}
