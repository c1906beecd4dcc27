//! `pstrata` command-line tool.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

fn run() -> Result<(), (i32, String)> {
    let argv = config::expand(std::env::args_os().collect()).map_err(|e| (2, e.to_string()))?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return Err((code, String::new()));
        }
    };
    if let Some(n) = cli.command.threads() {
        if n == 0 {
            return Err((2, "--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| (1, e.to_string()))?;
    }
    let outcome = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Diagnose(a) => commands::diagnose(a),
    };
    outcome.map_err(|e| (e.exit_code(), format!("error: {e}")))
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            if !msg.is_empty() {
                eprintln!("{msg}");
            }
            ExitCode::from(code as u8)
        }
    }
}
