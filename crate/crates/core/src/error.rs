use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimensionMismatch {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular Gram matrix (pivot {pivot} at row {row})")]
    SingularGram { row: usize, pivot: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate LFSR state: initial value is all zero")]
    DegenerateLfsr,

    #[error("polynomial with taps {taps:?} is not primitive for degree {degree} (period {period})")]
    NotPrimitive {
        degree: usize,
        taps: Vec<usize>,
        period: usize,
    },

    #[error("more variables than mask length ({n_vars} > {n_nodes})")]
    TooManyVariables { n_vars: usize, n_nodes: usize },

    #[error("nonlinearity pole at t = {0}")]
    NonlinearityPole(f64),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("series exceeds T_max ({len} > {t_max})")]
    ExceedsTMax { len: usize, t_max: usize },

    #[error("representation kind mismatch: model expects {expected}, got {found}")]
    KindMismatch { expected: String, found: String },

    #[error("need at least 2 distinct labels, found {0}")]
    TooFewClasses(usize),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("empty split: {0}")]
    EmptySplit(&'static str),

    #[error("empty grid")]
    EmptyGrid,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("unsupported format {found:?} (expected {expected:?})")]
    Format { expected: String, found: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: impl ToString, right: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
