use thiserror::Error;

/// Errors produced by the prediction toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("model state: {0}")]
    State(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate range: {0}")]
    DegenerateRange(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures that come from the numerics rather than the data.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::TrainingDiverged { .. } | Error::Numeric(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
