//! Library side of the `cfpeakon` command: configuration and file formats,
//! and one function per subcommand.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use commands::{render, Format};
pub use config::RunConfig;
pub use error::{exit, CliError};
pub use io::WeylFile;
