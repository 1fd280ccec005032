mod args;
mod commands;
mod manifest;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Errors the user can fix by changing arguments; they exit with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<gsrn::Error>() {
        Some(gsrn::Error::InvalidArgument(_))
        | Some(gsrn::Error::OutOfRange(_))
        | Some(gsrn::Error::DimensionMismatch { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Circle(a) => commands::circle(a),
        Command::Sphere(a) => commands::sphere(a),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
