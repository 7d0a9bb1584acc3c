use std::process::ExitCode;

use bident_core::bidient::MetricError;
use bident_core::nli::NliError;
use clap::Parser;

mod args;
mod commands;
mod config;
mod manifest;

use args::{Cli, Command, NliCommand};

/// A failed command and the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or invalid inputs: exit 1.
    Input(anyhow::Error),
    /// The entailment backend could not be reached or misbehaved: exit 2.
    Backend(anyhow::Error),
}

impl Failure {
    pub fn nli(e: NliError) -> Failure {
        if e.is_backend_failure() {
            Failure::Backend(e.into())
        } else {
            Failure::Input(e.into())
        }
    }

    pub fn metric(e: MetricError) -> Failure {
        match e {
            MetricError::Nli(e) => Failure::nli(e),
            other => Failure::Input(other.into()),
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Backend(_) => 2,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Backend(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; --help and --version are not errors
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let result = match cli.command {
        Command::Score(a) => commands::score(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Convert(a) => commands::convert(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Nli(NliCommand::Ping(a)) => commands::ping(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}
