use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("ill-posed chart: {0}")]
    IllPosedChart(String),
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("degenerate operator: {0}")]
    Degenerate(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("precision not reached: {0}")]
    Precision(String),
    #[error("integration failed on [{a}, {b}] after {subdivisions} subdivisions (error estimate {estimate:.3e})")]
    Integration {
        a: f64,
        b: f64,
        subdivisions: usize,
        estimate: f64,
    },
    #[error("path construction failed: {0}")]
    PathConstruction(String),
    #[error("ill-conditioned: {0}")]
    Conditioning(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
}

impl Error {
    pub fn parse(column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line: 1,
            column,
            message: message.into(),
        }
    }

    /// Coarse classification used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. } => ErrorKind::Input,
            Error::Domain(_)
            | Error::IllPosedChart(_)
            | Error::InvalidBand(_)
            | Error::Unsupported(_)
            | Error::Degenerate(_)
            | Error::Hypothesis(_) => ErrorKind::Hypothesis,
            Error::Precision(_)
            | Error::Integration { .. }
            | Error::PathConstruction(_)
            | Error::Conditioning(_)
            | Error::Eval(_) => ErrorKind::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Input,
    Hypothesis,
    Numeric,
}

pub type Result<T> = std::result::Result<T, Error>;
