//! The four summarize-* commands. Each walks the selected months and writes
//! its documents into the summary store; per-stock failures are recorded and
//! the remaining stocks still run.

use std::collections::BTreeMap;

use anyhow::Result;
use chrono::{Duration, NaiveDate};
use marketsense_core::calendar;
use marketsense_core::config::files;
use marketsense_core::io;
use marketsense_core::metrics::price_dynamics_metrics;
use marketsense_core::similarity::{build_universe_cache, StockDescription};
use marketsense_core::store::SummaryDocument;
use marketsense_core::summarize::dynamics::render_dynamics_summary;
use marketsense_core::summarize::fundamentals::{summarize_fundamentals, QuarterlyReport};
use marketsense_core::summarize::macro_env::{summarize_macro, MacroReport};
use marketsense_core::summarize::news::{
    clean_articles, default_window_days, summarize_daily_news, update_progressive_summary, DailyNewsSummary, NewsArticle,
};
use marketsense_core::summarize::SummaryKind;
use rayon::prelude::*;

use crate::run::Run;

pub const PEERS_FILE: &str = "peers.json";

type Outcome<T> = std::result::Result<T, String>;

pub fn news(run: &mut Run) -> Result<()> {
    let tickers = run.universe()?;
    let months = run.months()?;
    let articles = io::load_news(run.input("news", &run.data(files::NEWS))?)?;
    let names: BTreeMap<String, Option<String>> = match run.data(files::DESCRIPTIONS) {
        p if p.exists() => run.descriptions()?.into_iter().map(|d| (d.ticker, d.name)).collect(),
        _ => BTreeMap::new(),
    };
    let mut by_ticker: BTreeMap<&str, Vec<NewsArticle>> = BTreeMap::new();
    for a in &articles {
        by_ticker.entry(a.ticker.as_str()).or_default().push(a.clone());
    }
    let cleaned: BTreeMap<&str, Vec<NewsArticle>> = tickers
        .iter()
        .map(|t| {
            let raw = by_ticker.get(t.as_str()).map_or(&[][..], Vec::as_slice);
            (t.as_str(), clean_articles(raw, t, names.get(t).and_then(|n| n.as_deref())))
        })
        .collect();
    let client = run.llm()?;
    let store = run.store();

    for as_of in months {
        let window = run.cfg.pipeline.news_window_days.unwrap_or_else(|| default_window_days(as_of));
        let from = as_of - Duration::days(i64::from(window));
        let results: Vec<(&String, Outcome<(Vec<DailyNewsSummary>, SummaryDocument)>)> = tickers
            .par_iter()
            .map(|t| {
                let out = (|| -> marketsense_core::Result<_> {
                    let mut by_day: BTreeMap<NaiveDate, Vec<NewsArticle>> = BTreeMap::new();
                    for a in cleaned[t.as_str()].iter().filter(|a| a.date > from && a.date <= as_of) {
                        by_day.entry(a.date).or_default().push(a.clone());
                    }
                    let dailies = by_day
                        .iter()
                        .map(|(d, arts)| summarize_daily_news(arts, t, *d, client.as_ref()))
                        .collect::<marketsense_core::Result<Vec<_>>>()?;
                    let prev = store
                        .latest(SummaryKind::ProgressiveNews, Some(t), as_of - Duration::days(1))?
                        .map(|d| d.to_progressive())
                        .transpose()?;
                    let s = update_progressive_summary(prev.as_ref(), &dailies, as_of, window, client.as_ref())?;
                    Ok((dailies, SummaryDocument::from(&s)))
                })();
                (t, out.map_err(|e| e.to_string()))
            })
            .collect();
        for (t, r) in results {
            match r {
                Ok((dailies, doc)) => {
                    for d in &dailies {
                        store.persist(&d.into())?;
                    }
                    store.persist(&doc)?;
                }
                Err(e) => run.fail(Some(t), Some(as_of), e),
            }
        }
    }
    Ok(())
}

pub fn fundamentals(run: &mut Run) -> Result<()> {
    let tickers = run.universe()?;
    let months = run.months()?;
    let reports = io::load_fundamentals(run.input("fundamentals", &run.data(files::FUNDAMENTALS))?)?;
    let client = run.llm()?;
    let store = run.store();
    let n_quarters = run.cfg.pipeline.n_quarters;

    for as_of in months {
        let results: Vec<(&String, Outcome<SummaryDocument>)> = tickers
            .par_iter()
            .map(|t| {
                let known: Vec<QuarterlyReport> = reports
                    .get(t)
                    .map(|rs| rs.iter().filter(|r| r.available_on() <= as_of).cloned().collect())
                    .unwrap_or_default();
                if known.is_empty() {
                    return (t, Err(format!("no quarterly statements available by {as_of}")));
                }
                let out = summarize_fundamentals(t, &known, n_quarters, client.as_ref()).map(|s| s.to_document(as_of));
                (t, out.map_err(|e| e.to_string()))
            })
            .collect();
        for (t, r) in results {
            match r {
                Ok(doc) => {
                    store.persist(&doc)?;
                }
                Err(e) => run.fail(Some(t), Some(as_of), e),
            }
        }
    }
    Ok(())
}

pub fn dynamics(run: &mut Run) -> Result<()> {
    let tickers = run.universe()?;
    let months = run.months()?;
    let all = run.descriptions()?;
    let mut described: Vec<StockDescription> = Vec::new();
    for t in &tickers {
        match all.iter().find(|d| &d.ticker == t) {
            Some(d) => described.push(d.clone()),
            None => run.fail(Some(t), None, "no company description"),
        }
    }
    let embedder = run.embedder()?;
    let peers = build_universe_cache(&described, run.cfg.pipeline.peer_count, embedder.as_ref())?;
    run.write_json(PEERS_FILE, &peers)?;

    let panel = run.prices()?;
    let client = run.llm()?;
    let store = run.store();
    let (index, windows, risk) = (run.cfg.index.clone(), run.cfg.pipeline.windows.clone(), run.cfg.evaluation.risk_params());

    for as_of in months {
        let results: Vec<(&String, Outcome<SummaryDocument>)> = peers
            .par_iter()
            .map(|(t, ps)| {
                let names: Vec<String> = ps.iter().map(|p| p.ticker.clone()).collect();
                let out = price_dynamics_metrics(t, &names, &index, &panel, as_of, &windows, risk)
                    .and_then(|report| render_dynamics_summary(&report, t, client.as_ref()))
                    .map(|text| SummaryDocument::price_dynamics(t, as_of, text, names.len()));
                (t, out.map_err(|e| e.to_string()))
            })
            .collect();
        for (t, r) in results {
            match r {
                Ok(doc) => {
                    store.persist(&doc)?;
                }
                Err(e) => run.fail(Some(t), Some(as_of), e),
            }
        }
    }
    Ok(())
}

pub fn macro_env(run: &mut Run) -> Result<()> {
    let months = run.months()?;
    let reports: Vec<(NaiveDate, MacroReport)> = io::load_macro_dir(run.input("macro", &run.data(files::MACRO_DIR))?)?;
    let client = run.llm()?;
    let store = run.store();

    for as_of in months {
        let from = calendar::months_before(as_of, 1);
        let batch: Vec<MacroReport> =
            reports.iter().filter(|(d, _)| *d > from && *d <= as_of).map(|(_, r)| r.clone()).collect();
        if batch.is_empty() {
            log::warn!("{as_of}: no macro reports in the month, skipping");
            continue;
        }
        match summarize_macro(&batch, as_of, client.as_ref()) {
            Ok(s) => {
                store.persist(&(&s).into())?;
            }
            Err(e) => run.fail(None, Some(as_of), e),
        }
    }
    Ok(())
}
