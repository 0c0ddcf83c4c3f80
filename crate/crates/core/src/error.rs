use std::path::PathBuf;

/// Errors raised by model construction, samplers, estimators and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("vertex index {index} out of range for model with {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },

    #[error("invalid spin value {value} at position {position}; spins must be -1 or +1")]
    InvalidSpin { position: usize, value: i8 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("({0}, {1}) is not an edge of the model")]
    NotAnEdge(usize, usize),

    #[error("model has no layer metadata; a bipartite model is required")]
    MissingLayers,

    #[error("exact enumeration refused: {size} vertices exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("all importance weights are zero or invalid")]
    DegenerateWeights,

    #[error("edge sets of the exact solution and the estimate differ")]
    EdgeSetMismatch,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown method tag `{0}`")]
    UnknownMethod(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
