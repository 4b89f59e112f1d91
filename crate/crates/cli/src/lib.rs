//! Command-line front end: TOML configuration, the `solve`, `simulate`, `verify`,
//! `bench` and `export` commands, and deterministic CSV artifacts.

pub mod artifacts;
pub mod build;
pub mod commands;
pub mod config;
pub mod plots;
pub mod verify;

pub use commands::{CliError, Command, Outcome};
pub use config::{parse_config, Config, ConfigError};
