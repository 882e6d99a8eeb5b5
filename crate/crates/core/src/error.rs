use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("column `{column}` must hold exactly two distinct tokens, found {tokens:?}")]
    Cardinality { column: String, tokens: Vec<String> },

    #[error("row {row}: cannot parse `{value}` in column `{column}` as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("size error: {0}")]
    Size(String),

    #[error("phi is undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("adjustment proportion is undefined: {0}")]
    Proportion(String),

    #[error("no candidate rows to flip for attribute `{0}`")]
    Candidate(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("group support error: {0}")]
    GroupSupport(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Innermost error once [`Error::Context`] layers are peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
