//! The four textual inputs of the signal prompt.
//!
//! * [`news`]: daily summaries folded into a monthly progressive summary.
//! * [`fundamentals`]: abbreviated quarterly statements placed side by side.
//! * [`dynamics`]: price metrics of the stock, its peers and the index.
//! * [`macro_env`]: per-report summaries condensed into one outlook.
//!
//! All of them go through an [`LlmClient`](crate::llm::LlmClient) and never
//! call it on empty input.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub mod dynamics;
pub mod fundamentals;
pub mod macro_env;
pub mod news;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryKind {
    DailyNews,
    ProgressiveNews,
    Fundamentals,
    PriceDynamics,
    Macro,
}

impl SummaryKind {
    pub const ALL: [SummaryKind; 5] = [
        SummaryKind::DailyNews,
        SummaryKind::ProgressiveNews,
        SummaryKind::Fundamentals,
        SummaryKind::PriceDynamics,
        SummaryKind::Macro,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SummaryKind::DailyNews => "daily-news",
            SummaryKind::ProgressiveNews => "progressive-news",
            SummaryKind::Fundamentals => "fundamentals",
            SummaryKind::PriceDynamics => "price-dynamics",
            SummaryKind::Macro => "macro",
        }
    }
}

impl fmt::Display for SummaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Address of a stored summary. Macro summaries have no ticker.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SummaryKey {
    pub kind: SummaryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticker: Option<String>,
    pub as_of: NaiveDate,
}

impl SummaryKey {
    pub fn new(kind: SummaryKind, ticker: Option<&str>, as_of: NaiveDate) -> Self {
        Self { kind, ticker: ticker.map(str::to_string), as_of }
    }
}

impl fmt::Display for SummaryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.ticker {
            Some(t) => write!(f, "{}/{}/{}", self.kind, t, self.as_of),
            None => write!(f, "{}/{}", self.kind, self.as_of),
        }
    }
}
