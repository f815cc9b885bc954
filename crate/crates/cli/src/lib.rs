//! Library side of the `macgame` command-line tool: configuration
//! loading, presets, result files and the verbs themselves.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

pub use error::CliError;

/// Process exit status for a solve that stopped without converging.
pub const EXIT_NOT_CONVERGED: i32 = 2;
