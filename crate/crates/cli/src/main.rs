//! `weyl-lab`: command-line front end for the Weyl-sum laboratory.
//!
//! Every numeric subcommand prints a JSON envelope `{manifest, result}` and
//! can also write CSV. Exit codes: 0 success, 2 invalid input, 3 budget,
//! overflow or precision limits.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::output::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Core(ref c) if c.is_resource() => 3,
                CliError::Core(_) | CliError::Usage(_) => 2,
                CliError::Io(_) => 1,
            })
        }
    }
}
