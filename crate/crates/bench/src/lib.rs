//! Synthetic inputs shared by the benchmarks.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use marketsense_core::calendar::month_ends;
use marketsense_core::evaluation::SignalMatrix;
use marketsense_core::panel::PricePanel;
use marketsense_core::similarity::StockDescription;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tickers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("S{i:03}")).collect()
}

/// `n` random walks over `days` business days from 2021-01-04.
pub fn panel(n: usize, days: usize, seed: u64) -> PricePanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dates = Vec::with_capacity(days);
    let mut d = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
    while dates.len() < days {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(d);
        }
        d += Duration::days(1);
    }
    let mut level: Vec<f64> = (0..n).map(|_| rng.random_range(20.0..200.0)).collect();
    let rows = dates
        .iter()
        .map(|_| {
            let row = level.iter().map(|p| Some(*p)).collect();
            for p in &mut level {
                *p *= 1.0 + rng.random_range(-0.03..0.031);
            }
            row
        })
        .collect();
    PricePanel::new(dates, tickers(n), rows).unwrap()
}

/// Month ends covered by [`panel`] with a following month to measure.
pub fn signal_months(panel: &PricePanel, count: usize) -> Vec<NaiveDate> {
    let cal = panel.calendar();
    let all = month_ends(cal[260], *cal.last().unwrap());
    all[..count.min(all.len() - 1)].to_vec()
}

/// Roughly a quarter buys and a few sells.
pub fn signals(months: &[NaiveDate], tickers: &[String], seed: u64) -> SignalMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<Vec<i64>> = months
        .iter()
        .map(|_| {
            tickers
                .iter()
                .map(|_| match rng.random_range(0..100) {
                    0..23 => 1,
                    23 => -1,
                    _ => 0,
                })
                .collect()
        })
        .collect();
    SignalMatrix::from_values(months.to_vec(), tickers.to_vec(), &values).unwrap()
}

pub fn descriptions(n: usize, seed: u64) -> Vec<StockDescription> {
    const WORDS: [&str; 16] = [
        "software", "cloud", "bank", "lending", "oil", "gas", "retail", "stores", "drug", "clinical", "chips",
        "devices", "insurance", "premiums", "freight", "rail",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let words: Vec<&str> = (0..40).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            StockDescription::new(format!("S{i:03}"), words.join(" "))
        })
        .collect()
}
