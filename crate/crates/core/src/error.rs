use crate::flow::ProtocolCategory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Event timestamps went backwards.
    #[error("events out of order at index {index}: timestamp {timestamp} follows {previous}")]
    Ordering {
        index: usize,
        previous: f64,
        timestamp: f64,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("missing tolerance factor r3 for {0} (lower volume bound is required for UDP)")]
    MissingFactor(ProtocolCategory),

    #[error("no profile for protocol {0}")]
    MissingProfile(ProtocolCategory),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
