use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("referential error: {0}")]
    Reference(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("point ({lat}, {lon}) lies {distance_km:.1} km from the grid origin, beyond the {limit_km:.0} km projection limit")]
    Projection {
        lat: f64,
        lon: f64,
        distance_km: f64,
        limit_km: f64,
    },

    #[error("empty layer: {0}")]
    EmptyLayer(String),

    #[error("missing layer `{0}`")]
    MissingLayer(String),

    #[error("invalid scenario: {0}")]
    Spec(String),

    #[error("cell sets are not aligned: {0}")]
    Alignment(String),

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("combinatorial budget exceeded: {combinations} open sets > {budget}")]
    Budget { combinations: f64, budget: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
