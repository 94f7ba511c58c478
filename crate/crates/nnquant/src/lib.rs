//! File formats, command-line dispatch, and acceptance checks around
//! `nnquant-core`.

pub mod cli;
pub mod io;
pub mod output;
pub mod verify;

pub use cli::{dispatch, Cli, CliError};
