use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} is outside the valid region ({bound})")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        bound: String,
    },

    #[error("{what} did not converge within {cap} iterations")]
    IterationCap { what: &'static str, cap: usize },

    #[error("vertex enumeration exceeded {cap} vertices")]
    VertexBlowUp { cap: usize },

    #[error("rank-deficient least-squares problem")]
    RankDeficient,

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("empty tube: a tightened constraint set is empty")]
    EmptyTube,

    #[error("controller stayed in degraded mode for {0} consecutive MPC ticks")]
    DegradedMode(usize),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            got,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
