use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column {0} is constant and cannot be standardized")]
    ConstantColumn(usize),

    #[error("Gram matrix is numerically singular (reciprocal condition estimate {rcond:e})")]
    RankDeficient { rcond: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("brute-force oracle supports at most 10 predictors, got {0}")]
    TooLarge(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("model {model} needs at least {needed} predictors, got {p}")]
    TooFewColumns { model: u8, needed: usize, p: usize },

    #[error("cannot aggregate an empty list of runs")]
    EmptyList,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("time-point fits failed: {}", format_indexed(.0))]
    TimePoints(Vec<(usize, Error)>),

    #[error("benchmark run {run} failed: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),
}

fn format_indexed(errors: &[(usize, Error)]) -> String {
    errors
        .iter()
        .map(|(r, e)| format!("[{r}] {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
