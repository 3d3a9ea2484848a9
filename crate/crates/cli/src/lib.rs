//! Command-line front end: training, evaluation, prediction, reports,
//! cross-validation and synthetic corpora, with run manifests that make
//! every output reproducible.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod snapshot;
pub mod synth;
pub mod tsv;

use std::fmt;

use anyhow::Result;
use clap::Parser;

pub use commands::execute;

/// Invalid flag combinations or values; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(String);

impl UsageError {
    pub fn new(message: impl Into<String>) -> Self {
        Self(message.into())
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Parses `argv` (program name first), expands any config file and runs
/// the selected command.
pub fn run(argv: &[String]) -> Result<()> {
    let resolved = config::resolve_argv(argv)?;
    let cli = args::Cli::try_parse_from(&resolved).map_err(|e| UsageError::new(e.to_string()))?;
    execute(cli.command, resolved)
}
