//! Command-line front end: experiment manifests and the sweeps behind each
//! subcommand.

pub mod app;
pub mod commands;
pub mod config;
