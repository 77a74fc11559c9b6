//! Regenerates the shipped fixtures under `crates/cli/fixtures/`.
//!
//! cargo run -p marketsense-cli --example make_fixtures [-- <out-dir>]
//!
//! `grid100/` is a 100-stock signal grid over Nov 2022 - Jan 2024 with 338 buys,
//! 1150 holds and 12 sells, plus prices and caps to backtest it. `demo/` is a
//! 12-stock universe with raw news, statements, descriptions and macro notes
//! for the full summarize-to-report pipeline.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use marketsense_core::backtest::{CapTable, ScoreTable};
use marketsense_core::calendar::month_ends;
use marketsense_core::evaluation::SignalMatrix;
use marketsense_core::io;
use marketsense_core::panel::PricePanel;
use marketsense_core::similarity::StockDescription;
use marketsense_core::summarize::fundamentals::{QuarterId, QuarterlyReport};
use marketsense_core::summarize::news::{NewsArticle, NewsKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn business_days(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

/// Random walks with a common market factor; the index is the last column.
fn prices(rng: &mut ChaCha8Rng, tickers: &[String], index: &str, days: &[NaiveDate]) -> PricePanel {
    let market = Normal::new(0.0003, 0.009).unwrap();
    let n = tickers.len();
    let beta: Vec<f64> = (0..n).map(|_| rng.random_range(0.6..1.4)).collect();
    let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(-0.0004..0.0006)).collect();
    let idio: Vec<Normal<f64>> = (0..n).map(|_| Normal::new(0.0, rng.random_range(0.008..0.022)).unwrap()).collect();
    let mut level: Vec<f64> = (0..n).map(|_| rng.random_range(15.0..400.0)).collect();
    let mut idx = 4000.0;
    let mut rows = Vec::with_capacity(days.len());
    for _ in days {
        let mut row: Vec<Option<f64>> = level.iter().map(|p| Some((p * 100.0).round() / 100.0)).collect();
        row.push(Some((idx * 100.0f64).round() / 100.0));
        rows.push(row);
        let m = market.sample(rng);
        idx *= 1.0 + m;
        for i in 0..n {
            level[i] *= 1.0 + alpha[i] + beta[i] * m + idio[i].sample(rng);
        }
    }
    let mut names = tickers.to_vec();
    names.push(index.to_string());
    PricePanel::new(days.to_vec(), names, rows).unwrap()
}

fn caps(rng: &mut ChaCha8Rng, panel: &PricePanel, months: &[NaiveDate], tickers: &[String]) -> CapTable {
    let shares: Vec<f64> = tickers.iter().map(|_| rng.random_range(1e8..8e9f64).round()).collect();
    let mut by_date = BTreeMap::new();
    for &m in months {
        let t = panel.index_on_or_before(m).unwrap();
        let row = tickers
            .iter()
            .zip(&shares)
            .enumerate()
            .map(|(i, (name, s))| (name.clone(), (s * panel.price(t, i).unwrap()).round()))
            .collect();
        by_date.insert(m, row);
    }
    CapTable::new(by_date).unwrap()
}

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

fn grid100(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tickers: Vec<String> = (0..100).map(|i| format!("S{i:03}")).collect();
    let days = business_days(date(2021, 1, 4), date(2024, 2, 29));
    let panel = prices(&mut rng, &tickers, "SPY", &days);
    let months = month_ends(date(2022, 11, 1), date(2024, 1, 1));
    assert_eq!(months.len(), 15);

    let mut cells: Vec<i64> = [vec![1; 338], vec![-1; 12], vec![0; 1150]].concat();
    cells.shuffle(&mut rng);
    let values: Vec<Vec<i64>> = cells.chunks(tickers.len()).map(<[i64]>::to_vec).collect();
    let matrix = SignalMatrix::from_values(months.clone(), tickers.clone(), &values).unwrap();
    let mut scores = ScoreTable::new();
    for (t, row) in values.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            if *v == 1 {
                scores.entry(months[t]).or_default().insert(tickers[i].clone(), rng.random_range(3..=10u8));
            }
        }
    }

    io::write_prices(&panel, dir.join("prices.csv")).unwrap();
    io::write_caps(&caps(&mut rng, &panel, &months, &tickers), dir.join("caps.csv")).unwrap();
    io::write_signals(&matrix, &scores, dir.join("signals.csv")).unwrap();
    write(&dir.join("universe.txt"), &(tickers.join("\n") + "\n"));
    write(
        &dir.join("config.toml"),
        "# 100 stocks, Nov 2022 - Jan 2024, signals already generated.\n\
         universe = \"universe.txt\"\n\
         data_dir = \".\"\n\
         output_dir = \"out\"\n\
         signals = \"signals.csv\"\n\
         seed = 7\n\
         index = \"SPY\"\n\
         strategies = \"all\"\n\
         \n\
         [evaluation]\n\
         n_samples = 10000\n\
         cost_bps = 5.0\n",
    );
}

struct Company {
    ticker: &'static str,
    name: &'static str,
    sector: usize,
}

const COMPANIES: [Company; 12] = [
    Company { ticker: "NOVA", name: "Novatech Systems", sector: 0 },
    Company { ticker: "QBIT", name: "Qubit Cloud", sector: 0 },
    Company { ticker: "LUMA", name: "Lumaware", sector: 0 },
    Company { ticker: "DTRX", name: "Datatrix", sector: 0 },
    Company { ticker: "FRST", name: "First Harbor Bancorp", sector: 1 },
    Company { ticker: "CRDT", name: "Crestline Credit", sector: 1 },
    Company { ticker: "VALT", name: "Vaultstone Financial", sector: 1 },
    Company { ticker: "LEDG", name: "Ledgerline Bank", sector: 1 },
    Company { ticker: "PETR", name: "Petra Drilling", sector: 2 },
    Company { ticker: "GASX", name: "Gasworks Midstream", sector: 2 },
    Company { ticker: "RFNR", name: "Redfern Refining", sector: 2 },
    Company { ticker: "SOLR", name: "Solaris Upstream", sector: 2 },
];

const PROFILE: [&str; 3] = [
    "develops enterprise software and cloud platforms, selling subscriptions for data analytics, security \
     and developer tools to corporate customers",
    "is a regional bank offering deposits, mortgage lending, commercial loans and credit cards through a \
     network of branches and digital channels",
    "explores for and produces oil and natural gas, operating drilling rigs, pipelines and refining assets \
     across several upstream basins",
];

const EVENTS: [&[&str]; 3] = [
    &[
        "reports higher cloud bookings",
        "launches an AI assistant for developers",
        "signs a multi-year enterprise contract",
        "faces a data privacy inquiry",
        "cuts guidance on slower subscription growth",
        "expands its security product line",
    ],
    &[
        "raises its deposit rates",
        "reports rising loan loss provisions",
        "beats estimates on net interest income",
        "announces a share buyback",
        "sees commercial real estate exposure questioned",
        "passes the regulatory stress test",
    ],
    &[
        "increases output from new wells",
        "signs a long-term pipeline agreement",
        "reports lower refining margins",
        "raises its dividend after strong cash flow",
        "delays an offshore exploration project",
        "benefits from higher natural gas prices",
    ],
];

const OPINIONS: [&str; 4] = [
    "Analysts at Harbor Research upgrade the stock to outperform, citing improving margins.",
    "A sell-side note warns that valuation already reflects the recovery.",
    "Brokers keep a neutral rating and lower the price target slightly.",
    "Several analysts see the recent dip as a buying opportunity.",
];

const MACRO_NOTES: [(&str, &str); 6] = [
    ("2023-01-12-global-outlook", "Inflation is easing from its peak while labour markets stay tight. Central banks are expected to slow the pace of rate increases. Equity valuations remain sensitive to long-term yields."),
    ("2023-01-26-rates-strategy", "Yield curves remain inverted, signalling recession risk. Credit spreads are stable. We prefer quality balance sheets and short-duration exposure."),
    ("2023-02-16-global-outlook", "Stronger than expected activity data pushed yields higher. Energy prices fell on mild weather. Earnings revisions turned negative for cyclical sectors."),
    ("2023-03-09-banking-stress", "Deposit outflows at regional lenders raised concerns about bank funding. Policy makers launched liquidity facilities. Tighter lending standards are likely to weigh on growth."),
    ("2023-03-23-rates-strategy", "Markets now price rate cuts later this year. Technology shares rallied as yields fell. Financials underperformed on funding worries."),
    ("2023-03-30-commodities", "Oil rebounded on supply cuts while natural gas stayed weak. Refining margins normalised from last year's highs."),
];

fn demo_news(rng: &mut ChaCha8Rng) -> Vec<NewsArticle> {
    let days = business_days(date(2022, 12, 1), date(2023, 4, 28));
    let mut out = Vec::new();
    for c in &COMPANIES {
        for &d in &days {
            // LEDG goes quiet in March; its summary carries over.
            if c.ticker == "LEDG" && d.month() == 3 {
                continue;
            }
            if !rng.random_bool(0.3) {
                continue;
            }
            for _ in 0..rng.random_range(1..=2) {
                let event = EVENTS[c.sector][rng.random_range(0..EVENTS[c.sector].len())];
                let roll: f64 = rng.random();
                let article = if roll < 0.1 {
                    NewsArticle {
                        ticker: c.ticker.into(),
                        date: d,
                        title: "Markets drift as investors await data".into(),
                        body: "Stocks moved in a narrow range ahead of the jobs report.".into(),
                        kind: NewsKind::Factual,
                    }
                } else if roll < 0.35 {
                    NewsArticle {
                        ticker: c.ticker.into(),
                        date: d,
                        title: format!("{} ({}): analysts weigh in", c.name, c.ticker),
                        body: format!("{}\nClick here to subscribe to our newsletter.", OPINIONS[rng.random_range(0..OPINIONS.len())]),
                        kind: NewsKind::Opinion,
                    }
                } else {
                    NewsArticle {
                        ticker: c.ticker.into(),
                        date: d,
                        title: format!("{} {event}", c.name),
                        body: format!(
                            "{} {event}, the company said on {d}.\nShares of {} moved {:.1}% in early trading.\nRead more on our site.",
                            c.name,
                            c.ticker,
                            rng.random_range(-4.0..4.0f64)
                        ),
                        kind: NewsKind::Factual,
                    }
                };
                out.push(article);
            }
        }
    }
    out.sort_by(|a, b| (a.date, &a.ticker).cmp(&(b.date, &b.ticker)));
    out
}

fn demo_fundamentals(rng: &mut ChaCha8Rng) -> BTreeMap<String, Vec<QuarterlyReport>> {
    let mut out = BTreeMap::new();
    for c in &COMPANIES {
        let scale = rng.random_range(5e8..5e10f64);
        let mut q = QuarterId::new(2022, 1).unwrap();
        let mut reports = Vec::new();
        for k in 0..5 {
            let g = 1.0 + rng.random_range(-0.05..0.08) + 0.01 * k as f64;
            let revenue = (scale * g).round();
            let item = |x: f64| Some(x.round());
            reports.push(QuarterlyReport {
                quarter: q,
                available: None,
                balance_sheet: BTreeMap::from([
                    ("Total Assets".into(), item(revenue * 6.5)),
                    ("Total Liabilities".into(), item(revenue * 4.1)),
                    ("Cash and Equivalents".into(), item(revenue * 0.8)),
                ]),
                income_statement: BTreeMap::from([
                    ("Total Revenue".into(), item(revenue)),
                    ("Operating Income".into(), item(revenue * rng.random_range(0.08..0.3))),
                    ("Net Income".into(), item(revenue * rng.random_range(-0.02..0.2))),
                ]),
                cash_flow: BTreeMap::from([
                    ("Operating Cash Flow".into(), item(revenue * rng.random_range(0.1..0.35))),
                    (
                        "Capital Expenditure".into(),
                        if c.sector == 1 { None } else { item(-revenue * rng.random_range(0.05..0.2)) },
                    ),
                ]),
            });
            q = q.next();
        }
        out.insert(c.ticker.to_string(), reports);
    }
    out
}

fn demo(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(1123);
    let tickers: Vec<String> = COMPANIES.iter().map(|c| c.ticker.to_string()).collect();
    let days = business_days(date(2021, 6, 1), date(2023, 6, 30));
    let panel = prices(&mut rng, &tickers, "SPY", &days);
    let months = month_ends(date(2022, 12, 1), date(2023, 6, 1));

    let descriptions: Vec<StockDescription> = COMPANIES
        .iter()
        .map(|c| StockDescription {
            ticker: c.ticker.into(),
            text: format!("{} {}.", c.name, PROFILE[c.sector]),
            name: Some(c.name.into()),
        })
        .collect();

    io::write_prices(&panel, dir.join("prices.csv")).unwrap();
    io::write_caps(&caps(&mut rng, &panel, &months, &tickers), dir.join("caps.csv")).unwrap();
    io::write_json(&descriptions, dir.join("descriptions.json")).unwrap();
    io::write_news(&demo_news(&mut rng), dir.join("news.jsonl")).unwrap();
    io::write_json(&demo_fundamentals(&mut rng), dir.join("fundamentals.json")).unwrap();
    for (name, text) in MACRO_NOTES {
        write(&dir.join("macro").join(format!("{name}.txt")), &format!("{text}\n"));
    }
    write(&dir.join("universe.txt"), &(tickers.join("\n") + "\n"));
    write(
        &dir.join("config.toml"),
        "# 12 stocks, January to April 2023, raw inputs for every stage.\n\
         universe = \"universe.txt\"\n\
         data_dir = \".\"\n\
         output_dir = \"out\"\n\
         seed = 42\n\
         index = \"SPY\"\n\
         strategies = \"all\"\n\
         \n\
         [evaluation]\n\
         n_samples = 2000\n\
         \n\
         [pipeline]\n\
         start = \"2023-01-31\"\n\
         end = \"2023-04-30\"\n\
         n_quarters = 2\n\
         peer_count = 5\n",
    );
}

fn main() {
    let root: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    for (name, make) in [("grid100", grid100 as fn(&Path)), ("demo", demo)] {
        let dir = root.join(name);
        fs::create_dir_all(&dir).unwrap();
        make(&dir);
    }
    println!("fixtures written to {}", root.display());
}
