use std::path::PathBuf;

/// Errors raised by dataset loading, kernel computation, training and the
/// experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot load {path}: file not found")]
    MissingFile { path: PathBuf },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {file} line {line}: {message}")]
    Format { file: String, line: usize, message: String },

    #[error("graph {graph_id} has an empty feature map; the normalized kernel is undefined")]
    DegenerateGraph { graph_id: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at epoch {epoch}: loss is not finite (batch graphs {batch:?}, parameter norm {param_norm:.6e})")]
    Diverged {
        epoch: usize,
        batch: Vec<usize>,
        param_norm: f64,
    },

    #[error("malformed binary file {path}: {message}")]
    Binary { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
