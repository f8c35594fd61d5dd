use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid sampling bounds [{lo}, {hi}) (log_scale = {log_scale})")]
    InvalidBounds { lo: f64, hi: f64, log_scale: bool },

    #[error("not a probability vector: {0}")]
    NotSimplex(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("missing MNIST source file {}", .0.display())]
    MissingMnist(PathBuf),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("training diverged at epoch {epoch} (loss = {loss}); learning rate too high?")]
    Diverged { epoch: usize, loss: f64 },

    #[error("evaluation mask is empty")]
    EmptyMask,

    #[error("all {0} search trials failed")]
    AllTrialsFailed(usize),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
