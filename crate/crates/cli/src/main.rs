use std::process::ExitCode;

use clap::Parser;

mod commands;

use commands::{Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mdvs: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Core(ref c) if c.is_numeric() => 3,
                CliError::Core(_) => 2,
            })
        }
    }
}
