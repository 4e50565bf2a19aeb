//! Command-line front end for `avpref-core`: configuration, file formats,
//! HTTP clients and one function per subcommand.

pub mod client;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::RunConfig;
pub use error::{CliError, ExitCode};
