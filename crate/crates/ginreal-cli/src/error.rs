use std::io;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ginreal::Error),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(ginreal::Error::NoConvergence { .. }) => EXIT_CONVERGENCE,
            CliError::Core(_) | CliError::Precondition(_) | CliError::Input(_) => EXIT_PRECONDITION,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_IO,
        }
    }
}
