use std::process::ExitCode;

use clap::Parser;
use dmr_cli::args::Cli;
use dmr_cli::{config, execute, UsageError};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let resolved = match config::resolve_argv(&argv) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(&resolved);
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    match execute(cli.command, resolved) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
