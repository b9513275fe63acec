mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Ctx;

/// Bad flag values or config; maps to exit code 1 like clap's own errors.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        EXIT_USAGE
    } else if err
        .chain()
        .filter_map(|e| e.downcast_ref::<sbt_core::Error>())
        .any(sbt_core::Error::is_divergence)
    {
        EXIT_DIVERGED
    } else {
        EXIT_DATA
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = Ctx::new(cli.config.as_deref(), cli.seed)?;
    match &cli.command {
        Command::Gen(a) => commands::gen(a, &ctx),
        Command::Train(a) => commands::train_cmd(a, &ctx),
        Command::Classify(a) => commands::classify(a, &ctx),
        Command::Filter(a) => commands::filter(a, &ctx),
        Command::Sweep(a) => commands::sweep(a, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
