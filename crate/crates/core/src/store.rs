//! File-backed summary store.
//!
//! Documents live at `<root>/<kind>/<ticker>/<as_of>.json`, or
//! `<root>/macro/<as_of>.json` for macro summaries. The bytes on disk are the
//! canonical form; [`SummaryStore::load_bytes`] returns exactly what was persisted.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::summarize::fundamentals::{FundamentalsSummary, QuarterId};
use crate::summarize::macro_env::MacroSummary;
use crate::summarize::news::{DailyNewsSummary, ProgressiveNewsSummary};
use crate::summarize::{SummaryKey, SummaryKind};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lineage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predecessor: Option<SummaryKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_days: Option<u32>,
    /// Articles, reports or peers the text was built from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opinion_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quarters: Vec<QuarterId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryDocument {
    pub kind: SummaryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticker: Option<String>,
    pub as_of: NaiveDate,
    pub text: String,
    #[serde(default)]
    pub lineage: Lineage,
}

impl SummaryDocument {
    pub fn key(&self) -> SummaryKey {
        SummaryKey::new(self.kind, self.ticker.as_deref(), self.as_of)
    }

    pub fn price_dynamics(ticker: &str, as_of: NaiveDate, text: String, peer_count: usize) -> Self {
        Self {
            kind: SummaryKind::PriceDynamics,
            ticker: Some(ticker.to_string()),
            as_of,
            text,
            lineage: Lineage { source_count: Some(peer_count), ..Lineage::default() },
        }
    }

    fn expect(&self, kind: SummaryKind) -> Result<&str> {
        if self.kind != kind {
            return Err(Error::InvalidInput(format!("{} is not a {kind} summary", self.key())));
        }
        self.ticker.as_deref().ok_or_else(|| Error::InvalidInput(format!("{} has no ticker", self.key())))
    }

    pub fn to_daily(&self) -> Result<DailyNewsSummary> {
        let ticker = self.expect(SummaryKind::DailyNews)?;
        Ok(DailyNewsSummary {
            ticker: ticker.to_string(),
            date: self.as_of,
            text: self.text.clone(),
            source_article_count: self.lineage.source_count.unwrap_or(0),
            opinion_article_count: self.lineage.opinion_count.unwrap_or(0),
        })
    }

    pub fn to_progressive(&self) -> Result<ProgressiveNewsSummary> {
        let ticker = self.expect(SummaryKind::ProgressiveNews)?;
        Ok(ProgressiveNewsSummary {
            ticker: ticker.to_string(),
            as_of: self.as_of,
            text: self.text.clone(),
            window_days: self.lineage.window_days.unwrap_or(0),
            predecessor: self.lineage.predecessor.clone(),
        })
    }
}

impl From<&DailyNewsSummary> for SummaryDocument {
    fn from(s: &DailyNewsSummary) -> Self {
        Self {
            kind: SummaryKind::DailyNews,
            ticker: Some(s.ticker.clone()),
            as_of: s.date,
            text: s.text.clone(),
            lineage: Lineage {
                source_count: Some(s.source_article_count),
                opinion_count: Some(s.opinion_article_count),
                ..Lineage::default()
            },
        }
    }
}

impl From<&ProgressiveNewsSummary> for SummaryDocument {
    fn from(s: &ProgressiveNewsSummary) -> Self {
        Self {
            kind: SummaryKind::ProgressiveNews,
            ticker: Some(s.ticker.clone()),
            as_of: s.as_of,
            text: s.text.clone(),
            lineage: Lineage { predecessor: s.predecessor.clone(), window_days: Some(s.window_days), ..Lineage::default() },
        }
    }
}

impl FundamentalsSummary {
    pub fn to_document(&self, as_of: NaiveDate) -> SummaryDocument {
        SummaryDocument {
            kind: SummaryKind::Fundamentals,
            ticker: Some(self.ticker.clone()),
            as_of,
            text: self.text.clone(),
            lineage: Lineage { quarters: self.quarters_covered.clone(), ..Lineage::default() },
        }
    }
}

impl From<&MacroSummary> for SummaryDocument {
    fn from(s: &MacroSummary) -> Self {
        Self {
            kind: SummaryKind::Macro,
            ticker: None,
            as_of: s.as_of,
            text: s.text.clone(),
            lineage: Lineage { source_count: Some(s.report_count), ..Lineage::default() },
        }
    }
}

#[derive(Debug, Clone)]
pub struct SummaryStore {
    root: PathBuf,
}

fn check_segment(s: &str) -> Result<()> {
    if s.is_empty() || s == "." || s == ".." || s.contains(['/', '\\']) {
        return Err(Error::InvalidArgument(format!("'{s}' cannot be used as a store path segment")));
    }
    Ok(())
}

impl SummaryStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_of(&self, key: &SummaryKey) -> Result<PathBuf> {
        let mut p = self.root.join(key.kind.as_str());
        match (&key.ticker, key.kind) {
            (None, SummaryKind::Macro) => {}
            (Some(t), k) if k != SummaryKind::Macro => {
                check_segment(t)?;
                p.push(t);
            }
            _ => return Err(Error::InvalidArgument(format!("{key}: only macro summaries are stored without a ticker"))),
        }
        p.push(format!("{}.json", key.as_of));
        Ok(p)
    }

    /// Writes the document and returns its path. Overwrites an existing copy.
    pub fn persist(&self, doc: &SummaryDocument) -> Result<PathBuf> {
        let path = self.path_of(&doc.key())?;
        io::write_bytes(&io::to_json_bytes(doc)?, &path)?;
        Ok(path)
    }

    pub fn load_bytes(&self, key: &SummaryKey) -> Result<Vec<u8>> {
        let path = self.path_of(key)?;
        match fs::read(&path) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::NotFound(format!("summary {key}"))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    pub fn load(&self, key: &SummaryKey) -> Result<SummaryDocument> {
        let bytes = self.load_bytes(key)?;
        let doc: SummaryDocument = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            path: self.path_of(key).unwrap_or_default(),
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        if doc.key() != *key {
            return Err(Error::Integrity {
                path: self.path_of(key)?,
                line: 0,
                message: format!("document at {key} claims to be {}", doc.key()),
            });
        }
        Ok(doc)
    }

    pub fn contains(&self, key: &SummaryKey) -> bool {
        self.path_of(key).is_ok_and(|p| p.is_file())
    }

    /// The summary this one was built on. The first month of a chain has none.
    pub fn predecessor(&self, key: &SummaryKey) -> Result<SummaryDocument> {
        let doc = self.load(key)?;
        match doc.lineage.predecessor {
            Some(prev) => self.load(&prev),
            None => Err(Error::NotFound(format!("{key} is the root of its chain"))),
        }
    }

    /// Follows predecessor links back to the root, newest first.
    pub fn chain(&self, key: &SummaryKey) -> Result<Vec<SummaryDocument>> {
        let mut out = vec![self.load(key)?];
        while let Some(prev) = out.last().and_then(|d| d.lineage.predecessor.clone()) {
            if prev.as_of >= out.last().map_or(prev.as_of, |d| d.as_of) {
                return Err(Error::Integrity {
                    path: self.path_of(&prev)?,
                    line: 0,
                    message: format!("predecessor {prev} is not older than its successor"),
                });
            }
            out.push(self.load(&prev)?);
        }
        Ok(out)
    }

    /// Every stored key of `kind`, sorted.
    pub fn enumerate(&self, kind: SummaryKind) -> Result<Vec<SummaryKey>> {
        let dir = self.root.join(kind.as_str());
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut keys = Vec::new();
        let mut push_dates = |d: &Path, ticker: Option<&str>| -> Result<()> {
            for entry in fs::read_dir(d).map_err(|e| Error::io(d, e))? {
                let p = entry.map_err(|e| Error::io(d, e))?.path();
                if p.extension().is_some_and(|x| x == "json") {
                    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                    if let Ok(as_of) = NaiveDate::parse_from_str(stem, "%Y-%m-%d") {
                        keys.push(SummaryKey::new(kind, ticker, as_of));
                    }
                }
            }
            Ok(())
        };
        if kind == SummaryKind::Macro {
            push_dates(&dir, None)?;
        } else {
            for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
                let p = entry.map_err(|e| Error::io(&dir, e))?.path();
                if p.is_dir() {
                    let ticker = p.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                    push_dates(&p, Some(&ticker))?;
                }
            }
        }
        keys.sort();
        Ok(keys)
    }

    /// Latest stored summary of `kind` for `ticker` dated on or before `as_of`.
    pub fn latest(&self, kind: SummaryKind, ticker: Option<&str>, as_of: NaiveDate) -> Result<Option<SummaryDocument>> {
        let key = self
            .enumerate(kind)?
            .into_iter()
            .filter(|k| k.ticker.as_deref() == ticker && k.as_of <= as_of)
            .max();
        key.map(|k| self.load(&k)).transpose()
    }
}
