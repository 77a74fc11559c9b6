mod cli;
mod evaluate;
mod run;
mod signals;
mod summarize;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use run::Run;

fn dispatch(cli: &Cli) -> anyhow::Result<ExitCode> {
    let mut run = Run::start(cli)?;
    match cli.command {
        Command::SummarizeNews => summarize::news(&mut run)?,
        Command::SummarizeFundamentals => summarize::fundamentals(&mut run)?,
        Command::SummarizeDynamics => summarize::dynamics(&mut run)?,
        Command::SummarizeMacro => summarize::macro_env(&mut run)?,
        Command::Signal => signals::signal(&mut run)?,
        Command::Rank => signals::rank(&mut run)?,
        Command::Backtest => evaluate::backtest(&mut run)?,
        Command::Bootstrap => evaluate::bootstrap(&mut run)?,
        Command::SimilarityReport => evaluate::similarity(&mut run)?,
        Command::Report => {
            if !evaluate::report(&mut run)? {
                eprintln!(
                    "nothing to report under {}: run backtest, bootstrap or similarity-report first",
                    run.out().display()
                );
                return Ok(ExitCode::from(2));
            }
        }
    }
    run.finish()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
