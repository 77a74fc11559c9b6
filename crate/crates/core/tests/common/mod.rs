//! Independent reference implementations and fixture generators.
//!
//! Everything here is written from the definitions, without calling the
//! library routine it is compared against.

#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use marketsense_core::evaluation::Leg;
use marketsense_core::panel::PricePanel;
use marketsense_core::signal::{Signal, SignalContext};
use marketsense_core::similarity::{EmbeddingProvider, StockDescription};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

/// Geometric random walks, one per ticker, on business days from 2022-01-03.
pub fn synthetic_panel(n_tickers: usize, n_days: usize, seed: u64) -> PricePanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shock = Normal::new(0.0, 0.015).unwrap();
    let dates = business_days(NaiveDate::from_ymd_opt(2022, 1, 3).unwrap(), n_days);
    let tickers: Vec<String> = (0..n_tickers).map(|i| format!("T{i:02}")).collect();
    let drift: Vec<f64> = (0..n_tickers).map(|_| rng.random_range(-0.0005..0.001)).collect();
    let mut level: Vec<f64> = (0..n_tickers).map(|_| rng.random_range(20.0..200.0)).collect();
    let mut prices = Vec::with_capacity(n_days);
    for _ in 0..n_days {
        prices.push(level.iter().map(|&p| Some(p)).collect());
        for (p, mu) in level.iter_mut().zip(&drift) {
            *p *= (mu + shock.sample(&mut rng)).exp();
        }
    }
    PricePanel::new(dates, tickers, prices).unwrap()
}

pub fn column(panel: &PricePanel, j: usize) -> Vec<f64> {
    panel.rows().iter().map(|r| r[j].unwrap()).collect()
}

pub fn returns_of(prices: &[f64]) -> Vec<f64> {
    (1..prices.len()).map(|i| (prices[i] - prices[i - 1]) / prices[i - 1]).collect()
}

pub fn cumulative_from_prices(prices: &[f64]) -> f64 {
    prices[prices.len() - 1] / prices[0] - 1.0
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sample_std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub fn volatility(returns: &[f64], ppy: f64) -> f64 {
    sample_std(returns) * ppy.sqrt()
}

pub fn sharpe(returns: &[f64], rf: f64, ppy: f64) -> f64 {
    let excess: Vec<f64> = returns.iter().map(|r| r - rf / ppy).collect();
    mean(&excess) * ppy / volatility(returns, ppy)
}

/// Downside deviation over the full sample: negative excess returns squared, zeros elsewhere.
pub fn sortino(returns: &[f64], rf: f64, ppy: f64) -> f64 {
    let excess: Vec<f64> = returns.iter().map(|r| r - rf / ppy).collect();
    let dd = (excess.iter().map(|e| if *e < 0.0 { e * e } else { 0.0 }).sum::<f64>() / excess.len() as f64).sqrt();
    mean(&excess) * ppy / (dd * ppy.sqrt())
}

/// Worst loss over every (peak, later trough) pair.
pub fn max_drawdown_exhaustive(values: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..values.len() {
        for j in i..values.len() {
            worst = worst.min(values[j] / values[i] - 1.0);
        }
    }
    worst
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let n = x.len() as f64;
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
    cov / (sample_std(x) * sample_std(y))
}

fn leg_includes(leg: Leg, m: i64) -> bool {
    match leg {
        Leg::Long => m == 1,
        Leg::Short => m == -1,
        Leg::Both => m != 0,
    }
}

/// Compounded monthly average of `m * r` over the leg's cells with a defined return.
pub fn brute_performance(m: &[Vec<i64>], r: &[Vec<Option<f64>>], leg: Leg) -> f64 {
    let mut wealth = 1.0;
    for t in 0..m.len() {
        let mut picked = Vec::new();
        for i in 0..m[t].len() {
            if let Some(ret) = r[t][i] {
                if leg_includes(leg, m[t][i]) {
                    picked.push(m[t][i] as f64 * ret);
                }
            }
        }
        if !picked.is_empty() {
            wealth = wealth * (1.0 + picked.iter().sum::<f64>() / picked.len() as f64);
        }
    }
    wealth - 1.0
}

pub fn brute_hit_ratio(m: &[Vec<i64>], r: &[Vec<Option<f64>>], leg: Leg) -> Option<f64> {
    let (mut hits, mut n) = (0u32, 0u32);
    for t in 0..m.len() {
        for i in 0..m[t].len() {
            if let Some(ret) = r[t][i] {
                if leg_includes(leg, m[t][i]) {
                    n += 1;
                    if (m[t][i] as f64) * ret > 0.0 {
                        hits += 1;
                    }
                }
            }
        }
    }
    (n > 0).then(|| hits as f64 / n as f64)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Peers of `target` by sorting the full pairwise similarity table.
pub fn exhaustive_peers(
    target: &str,
    descriptions: &[StockDescription],
    provider: &dyn EmbeddingProvider,
    n: usize,
) -> Vec<(String, f64)> {
    let vectors: Vec<_> = descriptions.iter().map(|d| provider.embed(&d.text).unwrap()).collect();
    let k = descriptions.len();
    let mut table = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            table[i][j] = cosine(vectors[i].values(), vectors[j].values());
        }
    }
    let t = descriptions.iter().position(|d| d.ticker == target).unwrap();
    let mut rows: Vec<(String, f64)> = (0..k)
        .filter(|&j| j != t)
        .map(|j| (descriptions[j].ticker.clone(), table[t][j]))
        .collect();
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    rows.truncate(n);
    rows
}

const SECTORS: [&[&str]; 5] = [
    &["software", "cloud", "platform", "subscription", "developers", "enterprise", "data", "security"],
    &["bank", "lending", "deposits", "credit", "mortgage", "branches", "capital", "loans"],
    &["drug", "clinical", "therapy", "patients", "oncology", "vaccine", "biologics", "trials"],
    &["oil", "gas", "pipeline", "refining", "drilling", "upstream", "barrels", "exploration"],
    &["retail", "stores", "apparel", "grocery", "consumers", "ecommerce", "brands", "merchandise"],
];

/// Company descriptions drawn from five sector vocabularies.
pub fn description_fixture(n: usize, seed: u64) -> Vec<StockDescription> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let vocab = SECTORS[i % SECTORS.len()];
            let words: Vec<&str> = (0..12).map(|_| vocab[rng.random_range(0..vocab.len())]).collect();
            StockDescription::new(format!("C{i:02}"), format!("The company operates in {}.", words.join(" ")))
        })
        .collect()
}

fn vocab(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Contexts whose explanation reuses 8 news words, 6 dynamics words,
/// 4 fundamentals words and 2 macro words, each component having 12.
pub fn component_overlap_fixture(n: usize) -> (Vec<Signal>, Vec<SignalContext>) {
    let as_of = NaiveDate::from_ymd_opt(2023, 11, 30).unwrap();
    let mut signals = Vec::new();
    let mut contexts = Vec::new();
    for k in 0..n {
        let parts: BTreeMap<&str, Vec<String>> = [("news", "nw"), ("dyn", "dy"), ("fund", "fu"), ("macro", "ma")]
            .into_iter()
            .map(|(name, p)| (name, vocab(&format!("{p}{k}x"), 12)))
            .collect();
        let explanation: Vec<String> = [("news", 8), ("dyn", 6), ("fund", 4), ("macro", 2)]
            .into_iter()
            .flat_map(|(name, take)| parts[name][..take].to_vec())
            .collect();
        let ticker = format!("S{k:03}");
        contexts.push(SignalContext {
            ticker: ticker.clone(),
            as_of,
            news: parts["news"].join(" "),
            fundamentals: parts["fund"].join(" "),
            dynamics: parts["dyn"].join(" "),
            macro_env: Some(parts["macro"].join(" ")),
            horizon: "one month".into(),
        });
        let explanation = explanation.join(" ");
        signals.push(Signal {
            ticker,
            as_of,
            decision: marketsense_core::signal::Decision::Buy,
            raw_completion: format!("{explanation}\nDecision: BUY"),
            explanation,
        });
    }
    (signals, contexts)
}
