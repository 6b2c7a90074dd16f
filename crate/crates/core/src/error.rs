use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("token {token} out of range for modulus {p}")]
    TokenOutOfRange { token: usize, p: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("weights file schema error: {0}")]
    Schema(String),

    #[error("tensor `{name}` has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("tensor `{name}` contains a non-finite value at flat index {index}")]
    NonFinite { name: String, index: usize },

    #[error("cluster for frequency {k} is too small: {survivors} surviving members, need {needed}")]
    ClusterTooSmall {
        k: usize,
        survivors: usize,
        needed: usize,
    },

    #[error("cluster for frequency {0} has zero total mass")]
    ZeroMass(usize),

    #[error("degenerate cluster for frequency {0}: all phases coincide")]
    DegenerateCluster(usize),

    #[error("variant {0} is not pi-periodic")]
    NotPiPeriodic(String),

    #[error("unknown variant `{0}`")]
    UnknownVariant(String),

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error("report does not contain data for {0}")]
    MissingData(String),

    #[error("cached weights at {path} do not match the requested config")]
    CacheMismatch { path: PathBuf },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
