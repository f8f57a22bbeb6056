use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("fixed-wing transform is singular at zero speed")]
    SingularTransform,

    #[error("degenerate avoidance geometry: {0}")]
    Degenerate(&'static str),

    #[error("state outside grid bounds on axis {axis} (value {value})")]
    OutOfBounds { axis: usize, value: f64 },

    #[error("malformed grid file: {0}")]
    GridFormat(String),

    #[error("scenario config: {0}")]
    Config(String),

    #[error("unknown builtin scenario `{0}`")]
    UnknownScenario(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
