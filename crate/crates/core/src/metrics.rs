//! Price-derived statistics: returns, risk ratios, drawdown and correlation.
//!
//! Everything here is a pure function over immutable inputs. Ratios whose
//! denominator vanishes are reported as `None` rather than as a number, and
//! serialize to JSON `null`.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar;
use crate::error::{Error, Result};
use crate::panel::{PricePanel, ReturnPanel};

/// Trading days per year used to annualize daily statistics.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Look-back windows (in calendar months) reported for price dynamics.
pub const DEFAULT_WINDOWS: [u32; 3] = [3, 6, 12];

/// How far (in calendar days) a window boundary may sit from the nearest trading day.
const MAX_BOUNDARY_SLACK_DAYS: i64 = 7;

/// Risk-free rate and annualization convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    /// Annualized risk-free rate as a fraction.
    pub risk_free_rate: f64,
    pub periods_per_year: f64,
}

impl Default for RiskParams {
    fn default() -> Self {
        Self { risk_free_rate: 0.0, periods_per_year: TRADING_DAYS_PER_YEAR }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskMetrics {
    /// Annualized sample standard deviation of returns.
    pub volatility: f64,
    pub sharpe: Option<f64>,
    pub sortino: Option<f64>,
    /// Annualized downside deviation of excess returns.
    pub downside_deviation: f64,
}

pub fn simple_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    let cal = panel.calendar();
    if cal.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "simple returns need at least 2 dates, panel has {}",
            cal.len()
        )));
    }
    let rows = panel.rows();
    let returns = rows
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(prev, cur)| match (prev, cur) {
                    (Some(p), Some(c)) => Some(c / p - 1.0),
                    _ => None,
                })
                .collect()
        })
        .collect();
    Ok(ReturnPanel {
        calendar: cal[1..].to_vec(),
        tickers: panel.tickers().to_vec(),
        returns,
    })
}

/// Simple returns of a single complete price series.
pub fn series_returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
}

/// Compounded return of a series: `prod(1 + r) - 1`.
pub fn cumulative_return(returns: &[f64]) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::InsufficientData("cumulative return of an empty series".into()));
    }
    let mut growth = 1.0;
    for (index, &r) in returns.iter().enumerate() {
        if !(r > -1.0) || !r.is_finite() {
            return Err(Error::InvalidReturn { index, value: r });
        }
        growth *= 1.0 + r;
    }
    Ok(growth - 1.0)
}

/// Annualized volatility, Sharpe and Sortino ratios.
///
/// Volatility uses the sample (n-1) standard deviation. The downside
/// deviation is the root mean square of negative excess returns over the
/// full sample, annualized the same way.
pub fn risk_metrics(returns: &[f64], params: RiskParams) -> Result<RiskMetrics> {
    let n = returns.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "risk metrics need at least 2 returns, got {n}"
        )));
    }
    if let Some((index, &value)) = returns.iter().enumerate().find(|(_, r)| !r.is_finite()) {
        return Err(Error::InvalidReturn { index, value });
    }
    let ppy = params.periods_per_year;
    let rf_per_period = params.risk_free_rate / ppy;
    let nf = n as f64;

    let mean = returns.iter().sum::<f64>() / nf;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let volatility = var.sqrt() * ppy.sqrt();

    let mean_excess = mean - rf_per_period;
    let downside_sq = returns
        .iter()
        .map(|r| (r - rf_per_period).min(0.0).powi(2))
        .sum::<f64>()
        / nf;
    let downside_deviation = downside_sq.sqrt() * ppy.sqrt();

    let annual_excess = mean_excess * ppy;
    let sharpe = (volatility > 0.0).then(|| annual_excess / volatility);
    let sortino = (downside_deviation > 0.0).then(|| annual_excess / downside_deviation);
    Ok(RiskMetrics { volatility, sharpe, sortino, downside_deviation })
}

/// Worst peak-to-trough loss of a positive series, as a fraction `<= 0`.
pub fn max_drawdown(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("max drawdown of an empty series".into()));
    }
    let mut peak = f64::MIN_POSITIVE;
    let mut worst: f64 = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidInput(format!("value {v} at position {i} is not positive")));
        }
        peak = peak.max(v);
        worst = worst.min(v / peak - 1.0);
    }
    Ok(worst)
}

/// Pearson correlations over pairwise-complete observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub tickers: Vec<String>,
    /// `None` marks pairs with fewer than two overlapping points or zero variance.
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.tickers.iter().position(|t| t == a)?;
        let j = self.tickers.iter().position(|t| t == b)?;
        self.values[i][j]
    }
}

pub fn correlation_matrix(returns: &ReturnPanel) -> CorrelationMatrix {
    let k = returns.tickers.len();
    let columns: Vec<Vec<Option<f64>>> = (0..k).map(|j| returns.column(j)).collect();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        values[i][i] = Some(1.0);
        for j in (i + 1)..k {
            let rho = pearson(&columns[i], &columns[j]);
            values[i][j] = rho;
            values[j][i] = rho;
        }
    }
    CorrelationMatrix { tickers: returns.tickers.clone(), values }
}

fn pearson(xs: &[Option<f64>], ys: &[Option<f64>]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Metrics of one ticker over one look-back window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickerMetrics {
    pub ticker: String,
    pub cumulative_return: f64,
    pub volatility: f64,
    pub sharpe: Option<f64>,
    pub sortino: Option<f64>,
    pub max_drawdown: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub months: u32,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub rows: Vec<TickerMetrics>,
}

/// Input of the price dynamics summary: target, peers and index over several windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub as_of: NaiveDate,
    pub target: String,
    pub peers: Vec<String>,
    pub index: String,
    pub windows: Vec<WindowMetrics>,
    /// Correlations over the longest window.
    pub correlation_window_months: u32,
    pub correlation: CorrelationMatrix,
}

impl MetricsReport {
    /// Target, peers and index in report order.
    pub fn entities(&self) -> Vec<&str> {
        std::iter::once(self.target.as_str())
            .chain(self.peers.iter().map(String::as_str))
            .chain(std::iter::once(self.index.as_str()))
            .collect()
    }

    pub fn row(&self, months: u32, ticker: &str) -> Option<&TickerMetrics> {
        self.windows
            .iter()
            .find(|w| w.months == months)?
            .rows
            .iter()
            .find(|r| r.ticker == ticker)
    }
}

/// Metrics of a single complete price window.
pub fn window_metrics(ticker: &str, prices: &[f64], params: RiskParams) -> Result<TickerMetrics> {
    let returns = series_returns(prices);
    let risk = risk_metrics(&returns, params)?;
    Ok(TickerMetrics {
        ticker: ticker.to_string(),
        cumulative_return: cumulative_return(&returns)?,
        volatility: risk.volatility,
        sharpe: risk.sharpe,
        sortino: risk.sortino,
        max_drawdown: max_drawdown(prices)?,
    })
}

/// Resolves a look-back window of `months` ending at `as_of` to calendar indices.
pub fn window_bounds(panel: &PricePanel, ticker: &str, as_of: NaiveDate, months: u32) -> Result<(usize, usize)> {
    let cal = panel.calendar();
    let end = panel.index_on_or_before(as_of).ok_or_else(|| Error::InsufficientHistory {
        ticker: ticker.to_string(),
        detail: format!("no trading day on or before {as_of}"),
    })?;
    let wanted = calendar::months_before(as_of, months);
    let start = calendar::nearest(cal, wanted).expect("calendar is non-empty");
    let slack = (cal[start] - wanted).num_days().abs();
    if slack > MAX_BOUNDARY_SLACK_DAYS || start >= end {
        return Err(Error::InsufficientHistory {
            ticker: ticker.to_string(),
            detail: format!("{months}-month window from {wanted} to {as_of} exceeds available history"),
        });
    }
    Ok((start, end))
}

/// Metrics for `target`, its `peers` and the `index` over each window.
pub fn price_dynamics_metrics(
    target: &str,
    peers: &[String],
    index: &str,
    panel: &PricePanel,
    as_of: NaiveDate,
    windows: &[u32],
    params: RiskParams,
) -> Result<MetricsReport> {
    if windows.is_empty() {
        return Err(Error::InvalidArgument("at least one window is required".into()));
    }
    let mut entities: Vec<String> = Vec::with_capacity(peers.len() + 2);
    for t in std::iter::once(target).chain(peers.iter().map(String::as_str)).chain([index]) {
        if !entities.iter().any(|e| e == t) {
            entities.push(t.to_string());
        }
    }
    let idx = entities
        .iter()
        .map(|t| panel.require_ticker(t))
        .collect::<Result<Vec<_>>>()?;

    let per_window = windows
        .par_iter()
        .map(|&months| {
            let (start, end) = window_bounds(panel, target, as_of, months)?;
            let rows = entities
                .iter()
                .zip(&idx)
                .map(|(t, &i)| window_metrics(t, &panel.window(i, start, end)?, params))
                .collect::<Result<Vec<_>>>()?;
            Ok(WindowMetrics {
                months,
                start: panel.calendar()[start],
                end: panel.calendar()[end],
                rows,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let longest = *windows.iter().max().expect("non-empty");
    let (start, end) = window_bounds(panel, target, as_of, longest)?;
    let sub = panel.select(&entities)?.slice(start, end);
    let correlation = correlation_matrix(&simple_returns(&sub)?);

    Ok(MetricsReport {
        as_of,
        target: target.to_string(),
        peers: entities[1..entities.len() - 1].to_vec(),
        index: index.to_string(),
        windows: per_window,
        correlation_window_months: longest,
        correlation,
    })
}
