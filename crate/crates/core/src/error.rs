use thiserror::Error;

/// Failure raised from inside a model's `initialize` or `step`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct ModelError(pub String);

impl ModelError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model failure in replication {lineage_id} at t={time}: {source}")]
    Model {
        lineage_id: u64,
        time: u64,
        #[source]
        source: ModelError,
    },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("relative-error criterion undefined: pilot mean {mean} is zero")]
    RelativeErrorUndefined { mean: f64 },

    #[error("unknown cluster index {index} (stage has {len} clusters)")]
    UnknownCluster { index: usize, len: usize },

    #[error("path enumeration of {paths} paths exceeds the guard of {limit}")]
    EnumerationGuard { paths: f64, limit: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
