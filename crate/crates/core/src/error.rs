use std::path::PathBuf;

use crate::series::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("dataset failed validation with {} violation(s): {}", .0.len(), summarize(.0))]
    Invalid(Vec<Violation>),

    #[error("{path}: line {line}: {msg}")]
    Malformed { path: PathBuf, line: u64, msg: String },

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("numeric check failed: {0}")]
    Numeric(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the command-line front end:
    /// 1 = configuration, 2 = data, 3 = numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 1,
            Error::Data(_) | Error::Invalid(_) | Error::Malformed { .. } | Error::Io { .. } => 2,
            Error::NonFinite(_) | Error::Numeric(_) | Error::Divergence { .. } => 3,
            Error::Fold { source, .. } => source.exit_code(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn summarize(v: &[Violation]) -> String {
    let mut s = v
        .iter()
        .take(3)
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    if v.len() > 3 {
        s.push_str("; ...");
    }
    s
}
