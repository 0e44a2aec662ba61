use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An enumeration or dense table would exceed its configured cap.
    #[error("resource limit exceeded: {what} needs {needed}, cap is {cap}")]
    ResourceLimit { what: String, needed: u128, cap: u128 },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    /// Conditioning on an event of probability zero.
    #[error("conditioning on a null event: {0}")]
    NullEvent(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn limit(what: impl Into<String>, needed: u128, cap: u128) -> Self {
        Error::ResourceLimit {
            what: what.into(),
            needed,
            cap,
        }
    }
}
