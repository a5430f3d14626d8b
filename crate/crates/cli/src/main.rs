//! `drawcouple` command-line front end.
//!
//! Exit status: 0 on success, 2 when any verification report fails, 1 on
//! usage, parse or input errors.

mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use commands::{execute, Outcome};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli.command) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
