//! Stock-selection pipeline built on language-model summaries of news,
//! fundamentals, price dynamics and the macro environment.

pub mod backtest;
pub mod calendar;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod llm;
pub mod manifest;
pub mod metrics;
pub mod panel;
pub mod signal;
pub mod similarity;
pub mod store;
pub mod summarize;

pub use error::{Error, Result};

pub use backtest::{PerformanceReport, StrategySpec};
pub use config::RunConfig;
pub use evaluation::{BootstrapResult, Leg, MonthlyReturnMatrix, SignalMatrix};
pub use llm::{LlmClient, StubLlm, SyntheticAnalyst};
pub use manifest::RunManifest;
pub use metrics::{MetricsReport, RiskParams};
pub use panel::{PricePanel, ReturnPanel};
pub use signal::{Decision, RankedSignal, Signal, SignalContext};
pub use similarity::{EmbeddingProvider, HashingEmbedder, StockDescription};
pub use store::{SummaryDocument, SummaryStore};
pub use summarize::{SummaryKey, SummaryKind};
