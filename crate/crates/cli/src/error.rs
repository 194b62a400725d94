use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const THRESHOLD: i32 = 4;
    pub const FLAGGED: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("missing required keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),

    #[error(transparent)]
    Core(#[from] zigzag_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("grids are not comparable: {0}")]
    Incompatible(String),

    #[error("refusing to write non-finite value in cell (Z={z}, m={m})")]
    NonFiniteOutput { z: f64, m: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use zigzag_core::Error as E;
        match self {
            CliError::Config(_) | CliError::MissingKeys(_) => exit::CONFIG,
            CliError::Core(e) => match e {
                E::StepUnderflow { .. } | E::NonFinite { .. } | E::NoFactoredForm { .. } | E::SeriesDiverged(_) => {
                    exit::NUMERICAL
                }
                _ => exit::CONFIG,
            },
            CliError::Io { .. } | CliError::Format { .. } | CliError::Incompatible(_) => exit::CONFIG,
            CliError::NonFiniteOutput { .. } => exit::NUMERICAL,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
