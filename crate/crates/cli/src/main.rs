//! `utb`: command-line front end for uplift-gbm.
//!
//! Exit status is 0 on success, 1 when a run fails and 2 for invalid
//! invocations or configuration.

mod args;
mod commands;
mod config_file;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use uplift_gbm::UpliftError;

use args::{Cli, Command};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn io(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<UpliftError> for Failure {
    fn from(e: UpliftError) -> Self {
        if e.is_usage_error() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn parse(args: Vec<OsString>) -> Result<Cli, Failure> {
    let root = Cli::command();
    let args = match root.clone().ignore_errors(true).try_get_matches_from(&args) {
        Ok(lenient) if lenient.subcommand().is_some() => match lenient.get_one::<std::path::PathBuf>("config") {
            Some(path) => config_file::overlay(&root, &lenient, path, args)?,
            None => args,
        },
        _ => args,
    };
    let matches = root.try_get_matches_from(args).unwrap_or_else(|e| e.exit());
    Cli::from_arg_matches(&matches).map_err(|e| Failure::Usage(e.to_string()))
}

fn dispatch(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Eval(a) => commands::eval(a),
        Command::Cv(a) => commands::cv(a),
        Command::Synth(a) => commands::synth(a),
        Command::Ablate(a) => commands::ablate(a),
    }
}

fn run() -> Result<(), Failure> {
    let cli = parse(std::env::args_os().collect())?;
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();
    match cli.threads {
        Some(0) => Err(Failure::Usage("invalid configuration `threads`: must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Runtime(format!("cannot start {n} threads: {e}")))?
            .install(|| dispatch(&cli.command)),
        None => dispatch(&cli.command),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
