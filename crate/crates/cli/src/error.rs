use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] dynnet::Error),

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse { path: PathBuf, line: u64, column: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("solver stopped after {iterations} iterations without meeting the tolerances (report: {report})")]
    NotConverged { iterations: usize, report: PathBuf },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 2 for invalid input, 3 for solver failure, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Parse { .. } => 2,
            CliError::Core(e) => core_exit_code(e),
            CliError::NotConverged { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}

fn core_exit_code(e: &dynnet::Error) -> i32 {
    use dynnet::Error::*;
    match e {
        InvalidArgument(_) | InvalidConfig(_) | SimulationOverflow { .. } => 2,
        NonFinite { .. } | Factorization(_) => 3,
        Fold { source, .. } => core_exit_code(source),
    }
}
