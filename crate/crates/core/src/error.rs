use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model could not be fitted to the supplied data.
    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("simulation budget exceeded: {work} steps requested, budget is {budget}")]
    Budget { work: u128, budget: u128 },

    #[error("invalid parameter `{key}`: {reason}")]
    Constraint { key: String, reason: String },

    #[error("config line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("malformed data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn constraint(key: &str, reason: impl Into<String>) -> Self {
        Error::Constraint {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
