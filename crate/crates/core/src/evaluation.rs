//! Signal-following performance, hit ratio and bootstrap significance.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar;
use crate::error::{Error, Result};
use crate::panel::PricePanel;
use crate::signal::Decision;

pub const DEFAULT_SAMPLES: usize = 10_000;

/// Recorded in every [`BootstrapResult`] so a run can be replayed.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.9), stream = sample index";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    Long,
    Short,
    Both,
}

impl Leg {
    pub const ALL: [Leg; 3] = [Leg::Long, Leg::Short, Leg::Both];

    #[inline]
    fn active(self, m: i8) -> bool {
        match self {
            Leg::Long => m > 0,
            Leg::Short => m < 0,
            Leg::Both => m != 0,
        }
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Leg::Long => "long",
            Leg::Short => "short",
            Leg::Both => "both",
        })
    }
}

impl FromStr for Leg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "long" | "buy" => Ok(Leg::Long),
            "short" | "sell" => Ok(Leg::Short),
            "both" => Ok(Leg::Both),
            _ => Err(Error::InvalidArgument(format!("unknown leg '{s}', expected long, short or both"))),
        }
    }
}

/// Decisions indexed `[month][ticker]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalMatrix {
    pub months: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    cells: Vec<Vec<Decision>>,
}

fn check_axes(months: &[NaiveDate], tickers: &[String], rows: usize, cols: impl Iterator<Item = usize>) -> Result<()> {
    if months.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("months must be strictly increasing".into()));
    }
    crate::panel::check_unique(tickers)?;
    if rows != months.len() {
        return Err(Error::Shape(format!("{rows} rows for {} months", months.len())));
    }
    for (i, c) in cols.enumerate() {
        if c != tickers.len() {
            return Err(Error::Shape(format!("row {i} has {c} cells for {} tickers", tickers.len())));
        }
    }
    Ok(())
}

impl SignalMatrix {
    pub fn new(months: Vec<NaiveDate>, tickers: Vec<String>, cells: Vec<Vec<Decision>>) -> Result<Self> {
        check_axes(&months, &tickers, cells.len(), cells.iter().map(Vec::len))?;
        Ok(Self { months, tickers, cells })
    }

    pub fn from_values(months: Vec<NaiveDate>, tickers: Vec<String>, values: &[Vec<i64>]) -> Result<Self> {
        let cells = values
            .iter()
            .map(|row| row.iter().map(|&v| Decision::from_value(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(months, tickers, cells)
    }

    pub fn get(&self, month: usize, ticker: usize) -> Decision {
        self.cells[month][ticker]
    }

    pub fn rows(&self) -> &[Vec<Decision>] {
        &self.cells
    }

    pub fn count(&self, d: Decision) -> usize {
        self.cells.iter().flatten().filter(|&&c| c == d).count()
    }

    fn values(&self) -> Vec<i8> {
        self.cells.iter().flatten().map(|d| d.value()).collect()
    }
}

/// Next-month simple returns indexed like the signals. `None` marks a return
/// that cannot be computed; such cells never count as active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyReturnMatrix {
    pub months: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    cells: Vec<Vec<Option<f64>>>,
    /// Set by [`detrend_returns`], which leaves an already detrended matrix untouched.
    pub detrended: bool,
}

impl MonthlyReturnMatrix {
    pub fn new(months: Vec<NaiveDate>, tickers: Vec<String>, cells: Vec<Vec<Option<f64>>>) -> Result<Self> {
        check_axes(&months, &tickers, cells.len(), cells.iter().map(Vec::len))?;
        if let Some(v) = cells.iter().flatten().flatten().find(|v| !v.is_finite()) {
            return Err(Error::InvalidNumber(*v));
        }
        Ok(Self { months, tickers, cells, detrended: false })
    }

    pub fn get(&self, month: usize, ticker: usize) -> Option<f64> {
        self.cells[month][ticker]
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.cells
    }

    fn flat(&self) -> Vec<Option<f64>> {
        self.cells.iter().flatten().copied().collect()
    }
}

/// Subtracts each month's cross-sectional mean over defined returns.
pub fn detrend_returns(r: &MonthlyReturnMatrix) -> Result<MonthlyReturnMatrix> {
    if r.detrended {
        return Ok(r.clone());
    }
    let cells = r
        .cells
        .iter()
        .zip(&r.months)
        .map(|(row, month)| {
            let defined: Vec<f64> = row.iter().flatten().copied().collect();
            if defined.is_empty() {
                return Err(Error::InvalidInput(format!("no returns defined for {month}")));
            }
            let mean = defined.iter().sum::<f64>() / defined.len() as f64;
            Ok(row.iter().map(|v| v.map(|x| x - mean)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonthlyReturnMatrix { months: r.months.clone(), tickers: r.tickers.clone(), cells, detrended: true })
}

fn check_aligned(m: &SignalMatrix, r: &MonthlyReturnMatrix) -> Result<()> {
    if m.months != r.months {
        return Err(Error::Alignment("signal and return months differ".into()));
    }
    if m.tickers != r.tickers {
        return Err(Error::Alignment("signal and return tickers differ".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Stats {
    performance: f64,
    hits: usize,
    active: usize,
    flat_months: usize,
}

/// Core loop over flattened `[month][ticker]` cells.
fn stats(m: &[i8], r: &[Option<f64>], n_tickers: usize, leg: Leg) -> Stats {
    let mut s = Stats { performance: 1.0, hits: 0, active: 0, flat_months: 0 };
    for (mrow, rrow) in m.chunks(n_tickers).zip(r.chunks(n_tickers)) {
        let (mut sum, mut n) = (0.0, 0usize);
        for (&mij, rij) in mrow.iter().zip(rrow) {
            if let Some(rij) = rij {
                if leg.active(mij) {
                    let p = f64::from(mij) * rij;
                    sum += p;
                    n += 1;
                    if p > 0.0 {
                        s.hits += 1;
                    }
                }
            }
        }
        if n == 0 {
            s.flat_months += 1;
        } else {
            s.performance *= 1.0 + sum / n as f64;
        }
        s.active += n;
    }
    s.performance -= 1.0;
    s
}

fn observed_stats(m: &SignalMatrix, r: &MonthlyReturnMatrix, leg: Leg) -> Result<Stats> {
    check_aligned(m, r)?;
    let s = stats(&m.values(), &r.flat(), m.tickers.len().max(1), leg);
    if s.active == 0 {
        return Err(Error::InvalidInput(format!("no active {leg} signals with a defined return")));
    }
    if s.flat_months > 0 {
        log::warn!("{} of {} months have no active {leg} signals and count as flat", s.flat_months, m.months.len());
    }
    Ok(s)
}

/// Compounded average return of the active cells, month by month.
pub fn signal_performance(m: &SignalMatrix, r: &MonthlyReturnMatrix, leg: Leg) -> Result<f64> {
    observed_stats(m, r, leg).map(|s| s.performance)
}

/// Share of active cells whose signed return is positive.
pub fn hit_ratio(m: &SignalMatrix, r: &MonthlyReturnMatrix, leg: Leg) -> Result<f64> {
    check_aligned(m, r)?;
    let s = stats(&m.values(), &r.flat(), m.tickers.len().max(1), leg);
    if s.active == 0 {
        return Err(Error::UndefinedRatio(format!("no active {leg} signals")));
    }
    Ok(s.hits as f64 / s.active as f64)
}

fn random_values(n_cells: usize, seed: u64, stream: u64) -> Vec<i8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n_cells).map(|_| rng.random_range(-1i8..=1)).collect()
}

/// Uniform i.i.d. draws over sell/hold/buy. Bootstrap sample `k` uses stream `k`.
pub fn random_signal_matrix(months: &[NaiveDate], tickers: &[String], seed: u64, stream: u64) -> Result<SignalMatrix> {
    let vals = random_values(months.len() * tickers.len(), seed, stream);
    let cells = if tickers.is_empty() {
        vec![Vec::new(); months.len()]
    } else {
        vals.chunks(tickers.len())
            .map(|row| row.iter().map(|&v| Decision::from_value(i64::from(v)).expect("drawn from -1..=1")).collect())
            .collect()
    };
    SignalMatrix::new(months.to_vec(), tickers.to_vec(), cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub leg: Leg,
    pub detrend: bool,
    pub observed_r: f64,
    pub observed_hr: f64,
    pub quantile_r: f64,
    pub quantile_hr: f64,
    pub n_samples: usize,
    /// Samples with at least one active cell, the base of `quantile_hr`.
    pub n_samples_hr: usize,
    pub seed: u64,
    pub rng: String,
}

/// Percentile of `observed` among `samples`: strictly below counts fully, ties count half.
pub fn quantile(observed: f64, samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let (mut below, mut equal) = (0usize, 0usize);
    for &s in samples {
        if s < observed {
            below += 1;
        } else if s == observed {
            equal += 1;
        }
    }
    Some(100.0 * (below as f64 + 0.5 * equal as f64) / samples.len() as f64)
}

/// Compares the observed signals with `n_samples` random signal matrices.
pub fn bootstrap_evaluate(
    observed: &SignalMatrix,
    r: &MonthlyReturnMatrix,
    leg: Leg,
    n_samples: usize,
    seed: u64,
    detrend: bool,
) -> Result<BootstrapResult> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let detrended;
    let r = if detrend {
        detrended = detrend_returns(r)?;
        &detrended
    } else {
        r
    };
    let obs = observed_stats(observed, r, leg)?;
    let flat_r = r.flat();
    let n_tickers = observed.tickers.len();
    let samples: Vec<(f64, Option<f64>)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let s = stats(&random_values(flat_r.len(), seed, k), &flat_r, n_tickers, leg);
            (s.performance, (s.active > 0).then(|| s.hits as f64 / s.active as f64))
        })
        .collect();
    let perf: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let hr: Vec<f64> = samples.iter().filter_map(|s| s.1).collect();
    let observed_hr = obs.hits as f64 / obs.active as f64;
    Ok(BootstrapResult {
        leg,
        detrend,
        observed_r: obs.performance,
        observed_hr,
        quantile_r: quantile(obs.performance, &perf).expect("n_samples >= 1"),
        quantile_hr: quantile(observed_hr, &hr)
            .ok_or_else(|| Error::UndefinedRatio("no random sample had an active cell".into()))?,
        n_samples,
        n_samples_hr: hr.len(),
        seed,
        rng: RNG_NAME.to_string(),
    })
}

/// Return from the last close on or before each signal date to the last close
/// on or before the following month end.
pub fn next_month_returns(panel: &PricePanel, months: &[NaiveDate], tickers: &[String]) -> Result<MonthlyReturnMatrix> {
    let cols = tickers.iter().map(|t| panel.require_ticker(t)).collect::<Result<Vec<_>>>()?;
    let cells = months
        .iter()
        .map(|&d| {
            let start = panel.index_on_or_before(d);
            let end = panel.index_on_or_before(calendar::next_month_end(d));
            cols.iter()
                .map(|&c| match (start, end) {
                    (Some(s), Some(e)) if e > s => match (panel.price(s, c), panel.price(e, c)) {
                        (Some(p0), Some(p1)) => Some(p1 / p0 - 1.0),
                        _ => None,
                    },
                    _ => None,
                })
                .collect()
        })
        .collect();
    MonthlyReturnMatrix::new(months.to_vec(), tickers.to_vec(), cells)
}
