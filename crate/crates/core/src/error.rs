use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: cannot parse {token:?} as a number")]
    Parse { line: usize, token: String },

    #[error("line {line}: {message}")]
    Domain { line: usize, message: String },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("line {line}: time {t_ms} ms is not after the previous sample")]
    NonIncreasing { line: usize, t_ms: f64 },

    #[error("line {line}: {field} = {value} is outside 1..=10")]
    LevelOutOfRange {
        line: usize,
        field: &'static str,
        value: i64,
    },

    #[error("line {line}: unknown signal kind {kind:?} (expected rr or hr)")]
    UnknownSignalKind { line: usize, kind: String },

    #[error("line {line}: duplicate session id {id:?}")]
    DuplicateSession { line: usize, id: String },

    #[error("empty series")]
    EmptySeries,

    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("beat times must be strictly increasing (index {index})")]
    BeatsNotIncreasing { index: usize },

    #[error("level {0} is outside 1..=10")]
    InvalidLevel(u8),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("need both classes in training data")]
    SingleClass,

    #[error("points {first} and {second} are identical but carry opposite labels")]
    ConflictingDuplicate { first: usize, second: usize },

    #[error("invalid solver parameter: {0}")]
    InvalidParameter(String),

    #[error("margin is only defined for the linear kernel")]
    UnsupportedKernel,

    #[error("feature {index} is constant; cannot normalize")]
    ConstantFeature { index: usize },

    #[error("session {session}: metric {metric} is not finite")]
    NonFiniteFeature {
        session: String,
        metric: &'static str,
    },

    #[error("unsupported model version {0:?} (expected \"hrvsvm-model v1\")")]
    ModelVersion(String),

    #[error("model line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("model was trained for task {model}, not {requested}")]
    TaskMismatch { model: String, requested: String },

    #[error("{}: no such file", path.display())]
    NotFound { path: PathBuf },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Signal {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound { path }
        } else {
            Error::Io { path, source }
        }
    }

    /// 1-based line number of the offending input line, when the error has one.
    pub fn line(&self) -> Option<usize> {
        match self {
            Error::Parse { line, .. }
            | Error::Domain { line, .. }
            | Error::Format { line, .. }
            | Error::NonIncreasing { line, .. }
            | Error::LevelOutOfRange { line, .. }
            | Error::UnknownSignalKind { line, .. }
            | Error::DuplicateSession { line, .. }
            | Error::ModelFormat { line, .. } => Some(*line),
            Error::Signal { source, .. } => source.line(),
            _ => None,
        }
    }
}
