mod args;
mod commands;
mod output;
mod simulate;
mod table;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Outcome of a command that ran without an error.
pub enum Status {
    Done,
    NotConverged(String),
}

/// Exit code when the computation ran but an optimizer did not converge.
const EXIT_NOT_CONVERGED: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Envelope(a) => commands::envelope(a),
        Command::Scoretest(a) => commands::scoretest(a),
        Command::Predict(a) => commands::predict(a),
        Command::Coverage(a) => commands::coverage(a),
        Command::Simulate(a) => simulate::run(a),
    };
    match result {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let not_converged = matches!(
                e.downcast_ref::<modereg::Error>(),
                Some(modereg::Error::NotConverged(_) | modereg::Error::RetriesExhausted { .. })
            );
            ExitCode::from(if not_converged { EXIT_NOT_CONVERGED } else { 1 })
        }
    }
}
