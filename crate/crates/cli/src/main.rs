mod args;
mod commands;
mod error;
mod format;
mod input;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Settings};
use error::CliResult;

fn run(cli: Cli) -> CliResult<()> {
    let (opts, cmd): (_, fn(&Settings) -> CliResult<()>) = match cli.command {
        Command::Estimate(o) => (o, commands::estimate),
        Command::Scale(o) => (o, commands::scale),
        Command::Contrib(o) => (o, commands::contrib),
        Command::Fit(o) => (o, commands::fit),
        Command::Simulate(o) => (o, commands::simulate),
        Command::Compare(o) => (o, commands::compare),
    };
    cmd(&Settings::resolve(opts)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
