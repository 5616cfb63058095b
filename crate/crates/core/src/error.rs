use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A required configuration key is absent.
    #[error("missing field `{0}`")]
    MissingField(String),

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("negative rate: `{key}` = {value}")]
    NegativeRate { key: String, value: f64 },

    #[error("invalid value for `{key}`: {reason}")]
    InvalidField { key: String, reason: String },

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    /// An infinite upper q_R limit paired with a non-negative exponential coefficient.
    #[error("divergent tail: exponent coefficient {coefficient} with an infinite upper limit")]
    DivergentTail { coefficient: f64 },

    #[error("quadrature did not converge: best estimate {estimate}, achieved error {error}")]
    NonConvergence { estimate: f64, error: f64 },

    #[error("validation failed: {0}")]
    ValidationFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidField {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
