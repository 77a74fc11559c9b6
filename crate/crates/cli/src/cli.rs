use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "marketsense", version, about = "Language-model stock selection: summarize, signal, rank, backtest, bootstrap")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "marketsense.toml")]
    pub config: PathBuf,

    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Bootstrap sample count; overrides `evaluation.n_samples`.
    #[arg(long, global = true)]
    pub samples: Option<usize>,

    /// `all` or a comma-separated list of strategy names.
    #[arg(long, global = true)]
    pub strategies: Option<String>,

    /// Process a single month (YYYY-MM-DD or YYYY-MM).
    #[arg(long = "as-of", global = true, value_parser = parse_as_of)]
    pub as_of: Option<NaiveDate>,

    /// Ticker list; overrides `universe` in the config.
    #[arg(long, global = true)]
    pub universe: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

fn parse_as_of(s: &str) -> Result<NaiveDate, String> {
    marketsense_core::calendar::parse_as_of(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Daily news summaries and the monthly progressive summary per stock.
    SummarizeNews,
    /// Summaries of the latest quarterly statements per stock.
    SummarizeFundamentals,
    /// Peer selection and price dynamics summaries per stock.
    SummarizeDynamics,
    /// One macro outlook per month from the report directory.
    SummarizeMacro,
    /// Buy/hold/sell signals with explanations.
    Signal,
    /// Scores the buy explanations of each month.
    Rank,
    /// Backtests the selected strategies on the signal grid.
    Backtest,
    /// Bootstrap significance of signal performance and hit ratio.
    Bootstrap,
    /// Similarity between explanations and each summary component.
    SimilarityReport,
    /// Combined report of the latest backtest, bootstrap and similarity runs.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SummarizeNews => "summarize-news",
            Command::SummarizeFundamentals => "summarize-fundamentals",
            Command::SummarizeDynamics => "summarize-dynamics",
            Command::SummarizeMacro => "summarize-macro",
            Command::Signal => "signal",
            Command::Rank => "rank",
            Command::Backtest => "backtest",
            Command::Bootstrap => "bootstrap",
            Command::SimilarityReport => "similarity-report",
            Command::Report => "report",
        }
    }
}

impl Cli {
    /// The invocation in canonical form, as recorded in the manifest.
    pub fn canonical(&self) -> String {
        let mut parts = vec![self.command.name().to_string()];
        if let Some(d) = self.as_of {
            parts.push(format!("--as-of {d}"));
        }
        if let Some(s) = self.samples {
            parts.push(format!("--samples {s}"));
        }
        if let Some(s) = self.seed {
            parts.push(format!("--seed {s}"));
        }
        if let Some(s) = &self.strategies {
            parts.push(format!("--strategies {s}"));
        }
        if self.universe.is_some() {
            parts.push("--universe".into());
        }
        parts.join(" ")
    }
}
