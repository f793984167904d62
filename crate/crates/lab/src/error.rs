use orlicz_core::Error;

/// Exit status of a run whose checks all passed.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(Error),
}

impl From<Error> for LabError {
    fn from(e: Error) -> Self {
        match e {
            Error::Hypothesis(m) => Self::Hypothesis(m),
            other => Self::Core(other),
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Config(_) | Self::Io(_) => EXIT_USAGE,
            Self::Hypothesis(_) => EXIT_HYPOTHESIS,
            Self::Core(Error::Config(_) | Error::Domain(_) | Error::InvalidIndex(_)) => EXIT_USAGE,
            Self::Core(_) => EXIT_CHECK_FAILED,
        }
    }
}
