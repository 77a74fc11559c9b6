//! Price and return panels: dense `[date × ticker]` grids with explicit gaps.

use std::collections::HashSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calendar;
use crate::error::{Error, Result};

/// Daily adjusted closes aligned on a trading calendar.
///
/// Missing observations are `None`; they are never silently zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePanel {
    calendar: Vec<NaiveDate>,
    tickers: Vec<String>,
    prices: Vec<Vec<Option<f64>>>,
}

impl PricePanel {
    pub fn new(
        calendar: Vec<NaiveDate>,
        tickers: Vec<String>,
        prices: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if calendar.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("calendar dates must be strictly increasing".into()));
        }
        check_unique(&tickers)?;
        if prices.len() != calendar.len() {
            return Err(Error::Shape(format!(
                "{} price rows for {} calendar dates",
                prices.len(),
                calendar.len()
            )));
        }
        for (row, date) in prices.iter().zip(&calendar) {
            if row.len() != tickers.len() {
                return Err(Error::Shape(format!(
                    "{date}: {} prices for {} tickers",
                    row.len(),
                    tickers.len()
                )));
            }
            for (value, ticker) in row.iter().zip(&tickers) {
                if let Some(p) = value {
                    if !(p.is_finite() && *p > 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "{ticker} on {date}: price {p} is not positive"
                        )));
                    }
                }
            }
        }
        Ok(Self { calendar, tickers, prices })
    }

    /// Builds a panel from complete per-ticker series sharing one calendar.
    pub fn from_series<S: Into<String>>(
        calendar: Vec<NaiveDate>,
        series: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self> {
        let mut tickers = Vec::new();
        let mut columns = Vec::new();
        for (ticker, values) in series {
            let ticker = ticker.into();
            if values.len() != calendar.len() {
                return Err(Error::Shape(format!(
                    "{ticker}: {} prices for {} dates",
                    values.len(),
                    calendar.len()
                )));
            }
            tickers.push(ticker);
            columns.push(values);
        }
        let prices = (0..calendar.len())
            .map(|d| columns.iter().map(|c| Some(c[d])).collect())
            .collect();
        Self::new(calendar, tickers, prices)
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.prices
    }

    pub fn is_empty(&self) -> bool {
        self.calendar.is_empty()
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    pub fn require_ticker(&self, ticker: &str) -> Result<usize> {
        self.ticker_index(ticker)
            .ok_or_else(|| Error::NotFound(format!("ticker {ticker} is not in the price panel")))
    }

    pub fn price(&self, date_idx: usize, ticker_idx: usize) -> Option<f64> {
        self.prices[date_idx][ticker_idx]
    }

    pub fn column(&self, ticker_idx: usize) -> Vec<Option<f64>> {
        self.prices.iter().map(|row| row[ticker_idx]).collect()
    }

    /// Index of the last trading day on or before `date`.
    pub fn index_on_or_before(&self, date: NaiveDate) -> Option<usize> {
        calendar::on_or_before(&self.calendar, date)
    }

    /// Complete closes for `ticker_idx` over `start..=end`, failing on the first gap.
    pub fn window(&self, ticker_idx: usize, start: usize, end: usize) -> Result<Vec<f64>> {
        (start..=end)
            .map(|d| {
                self.prices[d][ticker_idx].ok_or_else(|| Error::MissingData {
                    ticker: self.tickers[ticker_idx].clone(),
                    date: self.calendar[d],
                })
            })
            .collect()
    }

    /// Restricts the panel to the given tickers, in the given order.
    pub fn select(&self, tickers: &[String]) -> Result<PricePanel> {
        let idx = tickers
            .iter()
            .map(|t| self.require_ticker(t))
            .collect::<Result<Vec<_>>>()?;
        let prices = self
            .prices
            .iter()
            .map(|row| idx.iter().map(|&i| row[i]).collect())
            .collect();
        PricePanel::new(self.calendar.clone(), tickers.to_vec(), prices)
    }

    /// Restricts the panel to dates `start..=end` (indices).
    pub fn slice(&self, start: usize, end: usize) -> PricePanel {
        PricePanel {
            calendar: self.calendar[start..=end].to_vec(),
            tickers: self.tickers.clone(),
            prices: self.prices[start..=end].to_vec(),
        }
    }
}

/// Simple daily returns; the calendar starts one day after the price calendar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnPanel {
    pub calendar: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub returns: Vec<Vec<Option<f64>>>,
}

impl ReturnPanel {
    pub fn column(&self, ticker_idx: usize) -> Vec<Option<f64>> {
        self.returns.iter().map(|row| row[ticker_idx]).collect()
    }
}

pub(crate) fn check_unique(tickers: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(tickers.len());
    for t in tickers {
        if !seen.insert(t.as_str()) {
            return Err(Error::InvalidInput(format!("ticker {t} appears more than once")));
        }
    }
    Ok(())
}
