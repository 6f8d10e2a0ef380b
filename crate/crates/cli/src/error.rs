use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes. They are part of the command-line contract.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const INPUT: u8 = 2;
    pub const INTEGRATION: u8 = 3;
    pub const RECONSTRUCTION: u8 = 4;
    /// The run stopped at a collision before `t_end`.
    pub const COLLISION: u8 = 5;
    /// The run stopped at a mass, position or speed blow-up before `t_end`.
    pub const BLOWUP: u8 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("integration failed at t = {time}")]
    Integration { time: f64 },
    #[error("reconstruction failed: {0}")]
    Reconstruction(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Input(_) | CliError::Io { .. } => exit::INPUT,
            CliError::Integration { .. } => exit::INTEGRATION,
            CliError::Reconstruction(_) => exit::RECONSTRUCTION,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
