use thiserror::Error;

/// Broad failure class, used by the CLI to choose an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}: line {line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("incomplete data: ticker {ticker} has no price on {date}")]
    IncompleteData { ticker: String, date: String },

    #[error("no ticker has a complete price history between {start} and {end}")]
    EmptyUniverse { start: String, end: String },

    #[error("insufficient data: need at least {required} rows, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("column {ticker} has zero variance")]
    DegenerateColumn { ticker: String },

    #[error("matrix is singular or ill-conditioned (reciprocal condition estimate {rcond:e})")]
    Singular { rcond: f64 },

    #[error("statistic undefined: {0}")]
    UndefinedStatistic(String),

    #[error("matrix is not symmetric: |m[{row}][{col}] - m[{col}][{row}]| = {gap:e}")]
    Asymmetric { row: usize, col: usize, gap: f64 },

    #[error("eigenvalue iteration did not converge after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },

    #[error("negative eigenvalue {value:e} below clamping tolerance")]
    NegativeEigenvalue { value: f64 },

    #[error("portfolio variance is not positive ({variance:e})")]
    DegeneratePortfolio { variance: f64 },

    #[error("index has no value on {date}")]
    Coverage { date: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Singular { .. }
            | Error::UndefinedStatistic(_)
            | Error::NonConvergence { .. }
            | Error::NegativeEigenvalue { .. }
            | Error::DegeneratePortfolio { .. }
            | Error::DegenerateColumn { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
