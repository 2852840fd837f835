use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures reported by a translation or embedding backend.
#[derive(Debug, Error)]
pub enum BackendError {
    #[error("language {0:?} is not supported by the backend")]
    UnsupportedLanguage(String),

    /// The request never produced a usable HTTP exchange, even after retrying.
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    /// The server answered with an error status.
    #[error("server returned HTTP {status}: {message}")]
    Server { status: u16, message: String },

    /// The server answered, but the body does not follow the wire protocol.
    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl BackendError {
    /// Transport failures and 5xx answers may succeed on a second attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport { .. } => true,
            BackendError::Server { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("backend produced an empty translation of {source_text:?} into {lang}")]
    DegenerateTranslation { source_text: String, lang: String },

    /// A malformed record in an input file.
    #[error("{path}:{line}: {message}")]
    Row { path: String, line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("similarity is undefined: {0}")]
    UndefinedSimilarity(String),

    #[error("correlation is undefined: {0}")]
    UndefinedCorrelation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
