//! `novas` command-line front end.

mod args;
mod config;
mod error;
mod output;
mod run;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use crate::args::Cli;
use crate::config::{resolve, Settings};
use crate::error::CliError;
use crate::output::read_sidecar;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.command.is_none() && cli.from_sidecar.is_none() {
        Cli::command()
            .error(
                clap::error::ErrorKind::MissingSubcommand,
                "a subcommand or --from-sidecar is required",
            )
            .exit();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.one_line());
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match (&cli.from_sidecar, &cli.command) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config("--from-sidecar replaces the subcommand; give one or the other".into()))
        }
        (Some(path), None) => {
            let mut cfg = read_sidecar(path)?;
            if cli.output.is_some() {
                cfg.output = cli.output;
            }
            if let Some(t) = cli.threads {
                cfg.threads = t;
            }
            cfg
        }
        (None, Some(command)) => {
            let file = match &cli.config {
                Some(p) => Settings::load(p)?,
                None => Settings::default(),
            };
            resolve(command, cli.output, cli.threads, &file)?
        }
        (None, None) => unreachable!("checked in main"),
    };
    run::execute(&cfg)
}
