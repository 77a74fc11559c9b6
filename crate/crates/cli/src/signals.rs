//! `signal` and `rank`, plus the per-month signal records they share.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use marketsense_core::backtest::ScoreTable;
use marketsense_core::evaluation::SignalMatrix;
use marketsense_core::io;
use marketsense_core::signal::{
    generate_signals, rank_buy_explanations, Decision, RankingOptions, Signal, SignalContext, DEFAULT_HORIZON,
};
use marketsense_core::store::SummaryStore;
use marketsense_core::summarize::{SummaryKey, SummaryKind};
use serde::{Deserialize, Serialize};

use crate::run::Run;

pub const SIGNALS_DIR: &str = "signals";
pub const SIGNALS_CSV: &str = "signals.csv";

/// One stock-month: what the model saw, what it said, and its ranking score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub context: SignalContext,
    pub signal: Signal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<u8>,
}

fn month_file(as_of: NaiveDate) -> String {
    format!("{SIGNALS_DIR}/{as_of}.json")
}

pub fn load_month(out: &Path, as_of: NaiveDate) -> Result<Vec<SignalRecord>> {
    let path = out.join(month_file(as_of));
    if !path.exists() {
        bail!("no signals for {as_of}; run `signal --as-of {as_of}` first");
    }
    Ok(io::read_json(path)?)
}

/// Every stored month, oldest first.
pub fn load_all(out: &Path) -> Result<BTreeMap<NaiveDate, Vec<SignalRecord>>> {
    let dir = out.join(SIGNALS_DIR);
    let mut months = BTreeMap::new();
    if !dir.is_dir() {
        return Ok(months);
    }
    for entry in std::fs::read_dir(&dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let Ok(as_of) = NaiveDate::parse_from_str(stem, "%Y-%m-%d") else {
            log::warn!("ignoring {}", path.display());
            continue;
        };
        months.insert(as_of, io::read_json(&path)?);
    }
    Ok(months)
}

/// Records of the selected months, or of every stored month without `--as-of`.
pub fn selected(run: &Run) -> Result<BTreeMap<NaiveDate, Vec<SignalRecord>>> {
    match run.as_of {
        Some(d) => Ok(BTreeMap::from([(d, load_month(run.out(), d)?)])),
        None => {
            let all = load_all(run.out())?;
            if all.is_empty() {
                bail!("no signals under {}; run `signal` first", run.out().join(SIGNALS_DIR).display());
            }
            Ok(all)
        }
    }
}

/// Rebuilds the signal grid from every stored month. Stocks missing from a
/// month count as HOLD.
pub fn rebuild_grid(run: &mut Run) -> Result<()> {
    let all = load_all(run.out())?;
    let tickers: Vec<String> =
        all.values().flatten().map(|r| r.signal.ticker.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut cells = Vec::with_capacity(all.len());
    let mut scores = ScoreTable::new();
    for (as_of, records) in &all {
        let by_ticker: BTreeMap<&str, &SignalRecord> = records.iter().map(|r| (r.signal.ticker.as_str(), r)).collect();
        let mut row = Vec::with_capacity(tickers.len());
        for t in &tickers {
            match by_ticker.get(t.as_str()) {
                Some(r) => {
                    row.push(r.signal.decision);
                    if let (Decision::Buy, Some(s)) = (r.signal.decision, r.score) {
                        scores.entry(*as_of).or_default().insert(t.clone(), s);
                    }
                }
                None => {
                    log::warn!("{t} has no signal on {as_of}, treated as HOLD");
                    row.push(Decision::Hold);
                }
            }
        }
        cells.push(row);
    }
    let matrix = SignalMatrix::new(all.keys().copied().collect(), tickers, cells)?;
    let path = run.out().join(SIGNALS_CSV);
    io::write_signals(&matrix, &scores, &path)?;
    let bytes = std::fs::read(&path)?;
    run.manifest.add_output(SIGNALS_CSV, &bytes);
    Ok(())
}

fn context(store: &SummaryStore, ticker: &str, as_of: NaiveDate) -> marketsense_core::Result<SignalContext> {
    let at = |kind| store.load(&SummaryKey::new(kind, Some(ticker), as_of));
    let news = at(SummaryKind::ProgressiveNews)?.text;
    let dynamics = at(SummaryKind::PriceDynamics)?.text;
    let fundamentals = store
        .latest(SummaryKind::Fundamentals, Some(ticker), as_of)?
        .ok_or_else(|| marketsense_core::Error::NotFound(format!("no fundamentals summary for {ticker} by {as_of}")))?
        .text;
    let macro_key = SummaryKey::new(SummaryKind::Macro, None, as_of);
    let macro_env = if store.contains(&macro_key) { Some(store.load(&macro_key)?.text) } else { None };
    Ok(SignalContext {
        ticker: ticker.to_string(),
        as_of,
        news,
        fundamentals,
        dynamics,
        macro_env,
        horizon: DEFAULT_HORIZON.to_string(),
    })
}

pub fn signal(run: &mut Run) -> Result<()> {
    let tickers = run.universe()?;
    let months = run.months()?;
    let client = run.llm()?;
    let store = run.store();

    for as_of in months {
        if !store.contains(&SummaryKey::new(SummaryKind::Macro, None, as_of)) {
            log::warn!("{as_of}: no macro summary, signals use the other three sections");
        }
        let mut contexts = Vec::with_capacity(tickers.len());
        for t in &tickers {
            match context(&store, t, as_of) {
                Ok(c) => contexts.push(c),
                Err(e) => run.fail(Some(t), Some(as_of), e),
            }
        }
        let mut records = Vec::with_capacity(contexts.len());
        for (ctx, result) in contexts.iter().zip(generate_signals(&contexts, client.as_ref())) {
            match result {
                Ok(signal) => records.push(SignalRecord { context: ctx.clone(), signal, score: None }),
                Err(e) => run.fail(Some(&ctx.ticker), Some(as_of), e),
            }
        }
        let buys = records.iter().filter(|r| r.signal.decision == Decision::Buy).count();
        let sells = records.iter().filter(|r| r.signal.decision == Decision::Sell).count();
        println!("{as_of}: {} signals, {buys} buy, {} hold, {sells} sell", records.len(), records.len() - buys - sells);
        run.write_json(&month_file(as_of), &records)?;
    }
    rebuild_grid(run)
}

pub fn rank(run: &mut Run) -> Result<()> {
    let client = run.llm()?;
    let options = RankingOptions { include_names: run.cfg.pipeline.include_names, seed: run.cfg.seed };
    let months = match run.as_of {
        Some(d) => vec![d],
        None => load_all(run.out())?.into_keys().collect(),
    };
    if months.is_empty() {
        bail!("no signals to rank; run `signal` first");
    }
    for as_of in months {
        let mut records = load_month(run.out(), as_of)?;
        let buys: Vec<Signal> =
            records.iter().filter(|r| r.signal.decision == Decision::Buy).map(|r| r.signal.clone()).collect();
        match rank_buy_explanations(&buys, client.as_ref(), options) {
            Ok(ranked) => {
                let scores: BTreeMap<String, u8> = ranked.into_iter().map(|r| (r.signal.ticker, r.score)).collect();
                for r in &mut records {
                    r.score = scores.get(&r.signal.ticker).copied();
                }
                println!("{as_of}: ranked {} buy explanations", scores.len());
                run.write_json(&month_file(as_of), &records)?;
            }
            Err(e) => run.fail(None, Some(as_of), e),
        }
    }
    rebuild_grid(run)
}
