use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("non-numeric cell {value:?} at (row {row}, col {col})")]
    NonNumeric { row: usize, col: usize, value: String },

    #[error("missing value at (row {row}, col {col})")]
    Missing { row: usize, col: usize },

    #[error("non-finite value at (sample {sample}, feature {feature})")]
    NonFinite { sample: usize, feature: usize },

    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("{0}")]
    Shape(String),

    #[error("cannot take log of {value} + offset at (sample {sample:?}, feature {feature:?})")]
    LogDomain {
        sample: String,
        feature: String,
        value: f64,
    },

    #[error("group map names unknown sample {0:?}")]
    UnknownSample(String),

    #[error("no group for sample {0:?} and no default group given")]
    MissingGroup(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown scenario {0} (expected 1..=4)")]
    UnknownScenario(u8),

    #[error("p = {p} out of range (rank is {rank})")]
    ComponentOutOfRange { p: usize, rank: usize },

    #[error("SVD did not converge after {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },

    #[error("non-finite statistic in summary for sample {0:?}")]
    NonFiniteSummary(String),

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
