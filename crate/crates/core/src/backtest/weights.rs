//! Monthly target weights for each strategy.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::strategy::{Rule, StrategySpec};
use crate::error::{Error, Result};
use crate::evaluation::SignalMatrix;
use crate::metrics::{risk_metrics, series_returns, RiskParams};
use crate::panel::PricePanel;
use crate::signal::{Decision, RankedSignal};

/// Ranking scores by month, then ticker.
pub type ScoreTable = BTreeMap<NaiveDate, BTreeMap<String, u8>>;

pub fn score_table(ranked: &[RankedSignal]) -> ScoreTable {
    let mut t = ScoreTable::new();
    for r in ranked {
        t.entry(r.signal.as_of).or_default().insert(r.signal.ticker.clone(), r.score);
    }
    t
}

/// Market capitalizations by observation date. A month uses the latest
/// observation on or before its rebalance date.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CapTable {
    by_date: BTreeMap<NaiveDate, BTreeMap<String, f64>>,
}

impl CapTable {
    pub fn new(by_date: BTreeMap<NaiveDate, BTreeMap<String, f64>>) -> Result<Self> {
        for (d, row) in &by_date {
            if let Some((t, v)) = row.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::InvalidInput(format!("market cap of {t} on {d} must be positive, got {v}")));
            }
        }
        Ok(Self { by_date })
    }

    pub fn get(&self, as_of: NaiveDate, ticker: &str) -> Option<f64> {
        self.by_date.range(..=as_of).next_back().and_then(|(_, row)| row.get(ticker).copied())
    }

    pub fn entries(&self) -> &BTreeMap<NaiveDate, BTreeMap<String, f64>> {
        &self.by_date
    }
}

/// Target weights indexed `[month][ticker]`; shorts are negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSchedule {
    pub months: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub weights: Vec<Vec<f64>>,
}

impl WeightSchedule {
    pub fn new(months: Vec<NaiveDate>, tickers: Vec<String>, weights: Vec<Vec<f64>>) -> Result<Self> {
        if months.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("schedule months must be strictly increasing".into()));
        }
        crate::panel::check_unique(&tickers)?;
        if weights.len() != months.len() || weights.iter().any(|r| r.len() != tickers.len()) {
            return Err(Error::Shape("weights must be months x tickers".into()));
        }
        if let Some(w) = weights.iter().flatten().find(|w| !w.is_finite()) {
            return Err(Error::InvalidNumber(*w));
        }
        Ok(Self { months, tickers, weights })
    }

    /// Names with a nonzero weight in `month`.
    pub fn holdings(&self, month: usize) -> BTreeSet<&str> {
        self.tickers
            .iter()
            .zip(&self.weights[month])
            .filter(|(_, w)| **w != 0.0)
            .map(|(t, _)| t.as_str())
            .collect()
    }

    pub fn gross_exposure(&self, month: usize) -> f64 {
        self.weights[month].iter().map(|w| w.abs()).sum()
    }
}

/// Tickers whose close on `as_of` is strictly above the mean of their last
/// `window` closes. Tickers without enough complete history are skipped.
pub fn moving_average_filter(panel: &PricePanel, universe: &[String], window: usize, as_of: NaiveDate) -> Result<BTreeSet<String>> {
    if window == 0 {
        return Err(Error::InvalidArgument("moving average window must be >= 1".into()));
    }
    let mut eligible = BTreeSet::new();
    let Some(end) = panel.index_on_or_before(as_of) else {
        log::warn!("no prices on or before {as_of}; moving average filter selects nothing");
        return Ok(eligible);
    };
    for t in universe {
        let c = panel.require_ticker(t)?;
        if end + 1 < window {
            log::warn!("{t}: {} closes before {as_of}, moving average needs {window}", end + 1);
            continue;
        }
        match panel.window(c, end + 1 - window, end) {
            Ok(closes) => {
                let mean = closes.iter().sum::<f64>() / window as f64;
                if closes[window - 1] > mean {
                    eligible.insert(t.clone());
                }
            }
            Err(e) => log::warn!("{t}: excluded from moving average filter: {e}"),
        }
    }
    Ok(eligible)
}

/// The `n` candidates with the highest Sharpe ratio over the last
/// `lookback` daily returns, best first, ties broken by ticker.
pub fn top_n_by_trailing_sharpe(
    candidates: &BTreeSet<String>,
    panel: &PricePanel,
    as_of: NaiveDate,
    n: usize,
    lookback: usize,
    params: RiskParams,
) -> Result<Vec<String>> {
    let end = panel.index_on_or_before(as_of);
    let mut scored: Vec<(f64, &String)> = Vec::new();
    for t in candidates {
        let c = panel.require_ticker(t)?;
        let closes = match end {
            Some(end) if end >= lookback => panel.window(c, end - lookback, end),
            _ => Err(Error::InsufficientHistory { ticker: t.clone(), detail: format!("fewer than {lookback} returns before {as_of}") }),
        };
        match closes.and_then(|p| risk_metrics(&series_returns(&p), params)) {
            Ok(m) => scored.push((m.sharpe.unwrap_or(f64::NEG_INFINITY), t)),
            Err(e) => log::warn!("{t}: no trailing Sharpe on {as_of}: {e}"),
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    if scored.len() < n {
        log::warn!("{as_of}: only {} of the requested {n} names have a trailing Sharpe", scored.len());
    }
    Ok(scored.into_iter().take(n).map(|(_, t)| t.clone()).collect())
}

/// Inputs beyond the signals that some strategies need.
#[derive(Debug, Clone, Copy, Default)]
pub struct StrategyInputs<'a> {
    pub scores: Option<&'a ScoreTable>,
    pub caps: Option<&'a CapTable>,
    pub risk: RiskParams,
}

fn equal(names: &[String]) -> BTreeMap<String, f64> {
    let w = 1.0 / names.len() as f64;
    names.iter().map(|t| (t.clone(), w)).collect()
}

fn cap_weighted(names: &[String], caps: &CapTable, month: NaiveDate) -> Result<BTreeMap<String, f64>> {
    let values = names
        .iter()
        .map(|t| {
            caps.get(month, t)
                .ok_or_else(|| Error::Configuration(format!("no market cap for {t} on or before {month}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = values.iter().sum();
    Ok(names.iter().zip(values).map(|(t, v)| (t.clone(), v / total)).collect())
}

fn scored_buys<'a>(buys: &'a [String], scores: &ScoreTable, month: NaiveDate) -> Vec<(&'a String, u8)> {
    let row = scores.get(&month);
    buys.iter()
        .filter_map(|t| match row.and_then(|r| r.get(t)) {
            Some(&s) => Some((t, s)),
            None => {
                log::warn!("{t} is a buy on {month} but has no ranking score");
                None
            }
        })
        .collect()
}

fn top_scored(buys: &[String], scores: &ScoreTable, month: NaiveDate, n: usize) -> Vec<String> {
    let mut s = scored_buys(buys, scores, month);
    s.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    s.into_iter().take(n).map(|(t, _)| t.clone()).collect()
}

/// Builds the monthly target weights of `spec` over the signal months.
///
/// Equal-weight strategies split the book evenly over the selected names;
/// MS puts buys long and sells short with equal absolute weight. A month
/// with nothing selected holds cash.
pub fn build_weights(spec: &StrategySpec, signals: &SignalMatrix, panel: &PricePanel, inputs: StrategyInputs) -> Result<WeightSchedule> {
    let name = spec.name();
    if spec.rule.needs_scores() && inputs.scores.is_none() {
        return Err(Error::Configuration(format!("{name} needs ranking scores")));
    }
    if spec.rule.needs_caps() && inputs.caps.is_none() {
        return Err(Error::Configuration(format!("{name} needs market caps")));
    }
    let index_series = match &spec.rule {
        Rule::Sp100 { benchmark: Some(b) } if panel.ticker_index(b).is_some() => Some(b.clone()),
        Rule::Sp100 { .. } => {
            if inputs.caps.is_none() {
                return Err(Error::Configuration(format!("{name} needs index prices or market caps")));
            }
            None
        }
        _ => None,
    };
    let tickers: Vec<String> = match &index_series {
        Some(b) => vec![b.clone()],
        None => signals.tickers.clone(),
    };
    for t in &tickers {
        panel.require_ticker(t)?;
    }
    let universe = &signals.tickers;
    let mut weights = Vec::with_capacity(signals.months.len());
    for (i, &month) in signals.months.iter().enumerate() {
        let pick = |d: Decision| -> Vec<String> {
            universe.iter().zip(&signals.rows()[i]).filter(|(_, &c)| c == d).map(|(t, _)| t.clone()).collect()
        };
        let buys = pick(Decision::Buy);
        let target: BTreeMap<String, f64> = match &spec.rule {
            Rule::Ms => {
                let sells = pick(Decision::Sell);
                let k = (buys.len() + sells.len()) as f64;
                buys.iter().map(|t| (t.clone(), 1.0 / k)).chain(sells.iter().map(|t| (t.clone(), -1.0 / k))).collect()
            }
            Rule::MsL => equal(&buys),
            Rule::MsLCap => cap_weighted(&buys, inputs.caps.expect("checked"), month)?,
            Rule::MsTopSharpe { n, lookback_days } => {
                let cands = buys.iter().cloned().collect();
                equal(&top_n_by_trailing_sharpe(&cands, panel, month, *n, *lookback_days, inputs.risk)?)
            }
            Rule::Sp100Eq => equal(universe),
            Rule::Sp100 { .. } => match &index_series {
                Some(b) => BTreeMap::from([(b.clone(), 1.0)]),
                None => cap_weighted(universe, inputs.caps.expect("checked"), month)?,
            },
            Rule::Naive { ma_window, fully_allocated } => {
                let eligible: Vec<String> = moving_average_filter(panel, universe, *ma_window, month)?.into_iter().collect();
                if *fully_allocated {
                    equal(&eligible)
                } else {
                    let w = 1.0 / universe.len() as f64;
                    eligible.into_iter().map(|t| (t, w)).collect()
                }
            }
            Rule::NaiveTop { n, ma_window, lookback_days } => {
                let eligible = moving_average_filter(panel, universe, *ma_window, month)?;
                equal(&top_n_by_trailing_sharpe(&eligible, panel, month, *n, *lookback_days, inputs.risk)?)
            }
            Rule::MsTopGpt { n } => equal(&top_scored(&buys, inputs.scores.expect("checked"), month, *n)),
            Rule::MsTopCapGpt { n } => {
                cap_weighted(&top_scored(&buys, inputs.scores.expect("checked"), month, *n), inputs.caps.expect("checked"), month)?
            }
            Rule::MsHighGpt { threshold } => {
                let sel: Vec<String> = scored_buys(&buys, inputs.scores.expect("checked"), month)
                    .into_iter()
                    .filter(|(_, s)| s > threshold)
                    .map(|(t, _)| t.clone())
                    .collect();
                equal(&sel)
            }
            Rule::MsLowGpt { threshold } => {
                let sel: Vec<String> = scored_buys(&buys, inputs.scores.expect("checked"), month)
                    .into_iter()
                    .filter(|(_, s)| s <= threshold)
                    .map(|(t, _)| t.clone())
                    .collect();
                equal(&sel)
            }
        };
        if target.is_empty() {
            log::warn!("{name}: nothing selected on {month}, holding cash");
        }
        weights.push(tickers.iter().map(|t| target.get(t).copied().unwrap_or(0.0)).collect());
    }
    WeightSchedule::new(signals.months.clone(), tickers, weights)
}
