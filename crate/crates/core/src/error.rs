use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input data violated a precondition (empty series, bad range, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A file or record did not follow its declared format.
    #[error("format error: {0}")]
    Format(String),

    /// A score is mathematically undefined for the given data.
    #[error("undefined score: {0}")]
    UndefinedScore(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
