//! Loaders and writers for the on-disk formats.
//!
//! | file | format |
//! |---|---|
//! | prices | CSV `date,ticker,adj_close`; an empty price is a gap |
//! | signals | CSV `as_of,ticker,decision,score`; decision in -1/0/1, score 0..=10 on ranked buys |
//! | caps | CSV `as_of,ticker,market_cap` |
//! | descriptions | JSON array of `{ticker, description, name?}` |
//! | news | JSON lines `{ticker, date, title, body, kind}` |
//! | fundamentals | JSON object `{ticker: [quarterly report, ...]}` |
//! | macro | directory of `YYYY-MM-DD-<name>.txt` files |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backtest::{CapTable, ScoreTable};
use crate::error::{Error, Result};
use crate::evaluation::SignalMatrix;
use crate::panel::PricePanel;
use crate::signal::Decision;
use crate::similarity::StockDescription;
use crate::summarize::fundamentals::QuarterlyReport;
use crate::summarize::macro_env::MacroReport;
use crate::summarize::news::NewsArticle;

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let found: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(parse_err(path, 1, format!("expected header '{}', found '{}'", header.join(","), found.join(","))));
    }
    Ok(rdr)
}

/// Yields `(line, fields)` for each data row.
fn rows(path: &Path, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = reader(path, header)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(parse_err(path, line, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn parse_date(path: &Path, line: u64, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| parse_err(path, line, format!("'{s}' is not a YYYY-MM-DD date")))
}

fn parse_f64(path: &Path, line: u64, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| parse_err(path, line, format!("'{s}' is not a number")))
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn finish(path: &Path, mut w: csv::Writer<fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads a long-format price file. Tickers come out sorted.
pub fn load_prices(path: impl AsRef<Path>) -> Result<PricePanel> {
    let path = path.as_ref();
    let mut cells: BTreeMap<(NaiveDate, String), (u64, Option<f64>)> = BTreeMap::new();
    for (line, f) in rows(path, &["date", "ticker", "adj_close"])? {
        let date = parse_date(path, line, &f[0])?;
        if f[1].is_empty() {
            return Err(parse_err(path, line, "empty ticker"));
        }
        let price = if f[2].is_empty() {
            None
        } else {
            let p = parse_f64(path, line, &f[2])?;
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::Validation { path: path.into(), line, message: format!("price {p} must be positive") });
            }
            Some(p)
        };
        if let Some((first, _)) = cells.insert((date, f[1].clone()), (line, price)) {
            return Err(Error::Integrity {
                path: path.into(),
                line,
                message: format!("duplicate row for ({date}, {}), first seen on line {first}", f[1]),
            });
        }
    }
    let dates: Vec<NaiveDate> = cells.keys().map(|(d, _)| *d).collect::<BTreeSet<_>>().into_iter().collect();
    let tickers: Vec<String> = cells.keys().map(|(_, t)| t.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let col: BTreeMap<&str, usize> = tickers.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut prices = vec![vec![None; tickers.len()]; dates.len()];
    let mut row = 0;
    for ((d, t), (_, p)) in &cells {
        while dates[row] != *d {
            row += 1;
        }
        prices[row][col[t.as_str()]] = *p;
    }
    PricePanel::new(dates, tickers, prices)
}

/// Writes every cell, gaps as empty prices, so loading gives the panel back.
pub fn write_prices(panel: &PricePanel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["date", "ticker", "adj_close"])?;
    for (d, row) in panel.calendar().iter().zip(panel.rows()) {
        for (t, p) in panel.tickers().iter().zip(row) {
            w.write_record([d.to_string(), t.clone(), p.map(|v| v.to_string()).unwrap_or_default()])?;
        }
    }
    finish(path, w)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionCounts {
    pub buy: usize,
    pub hold: usize,
    pub sell: usize,
}

impl DecisionCounts {
    pub fn of(m: &SignalMatrix) -> Self {
        Self { buy: m.count(Decision::Buy), hold: m.count(Decision::Hold), sell: m.count(Decision::Sell) }
    }

    pub fn total(&self) -> usize {
        self.buy + self.hold + self.sell
    }
}

impl fmt::Display for DecisionCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} buy / {} hold / {} sell", self.buy, self.hold, self.sell)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalFile {
    pub matrix: SignalMatrix,
    pub scores: ScoreTable,
}

impl SignalFile {
    pub fn counts(&self) -> DecisionCounts {
        DecisionCounts::of(&self.matrix)
    }
}

/// Loads a complete months x tickers signal grid with optional buy scores.
pub fn load_signals(path: impl AsRef<Path>) -> Result<SignalFile> {
    let path = path.as_ref();
    let validation = |line, message: String| Error::Validation { path: path.into(), line, message };
    let mut cells: BTreeMap<(NaiveDate, String), (u64, Decision)> = BTreeMap::new();
    let mut scores = ScoreTable::new();
    for (line, f) in rows(path, &["as_of", "ticker", "decision", "score"])? {
        let as_of = parse_date(path, line, &f[0])?;
        let value: i64 = f[2].parse().map_err(|_| parse_err(path, line, format!("'{}' is not an integer decision", f[2])))?;
        let decision = Decision::from_value(value).map_err(|_| validation(line, format!("decision {value} is not one of -1, 0, 1")))?;
        if !f[3].is_empty() {
            let score: i64 = f[3].parse().map_err(|_| parse_err(path, line, format!("'{}' is not an integer score", f[3])))?;
            if !(0..=10).contains(&score) {
                return Err(validation(line, format!("score {score} is outside 0..=10")));
            }
            if decision != Decision::Buy {
                return Err(validation(line, format!("only buy signals carry a score, {} has {score}", f[1])));
            }
            scores.entry(as_of).or_default().insert(f[1].clone(), score as u8);
        }
        if let Some((first, _)) = cells.insert((as_of, f[1].clone()), (line, decision)) {
            return Err(Error::Integrity {
                path: path.into(),
                line,
                message: format!("duplicate signal for ({as_of}, {}), first seen on line {first}", f[1]),
            });
        }
    }
    let months: Vec<NaiveDate> = cells.keys().map(|(d, _)| *d).collect::<BTreeSet<_>>().into_iter().collect();
    let tickers: Vec<String> = cells.keys().map(|(_, t)| t.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut grid = Vec::with_capacity(months.len());
    for m in &months {
        let row = tickers
            .iter()
            .map(|t| {
                cells.get(&(*m, t.clone())).map(|c| c.1).ok_or_else(|| Error::Integrity {
                    path: path.into(),
                    line: 0,
                    message: format!("no signal for ({m}, {t}); every month needs a row per ticker"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        grid.push(row);
    }
    let matrix = SignalMatrix::new(months, tickers, grid)?;
    if matrix.count(Decision::Buy) + matrix.count(Decision::Sell) == 0 {
        log::warn!("{}: no active signals, every row is a hold", path.display());
    }
    Ok(SignalFile { matrix, scores })
}

pub fn write_signals(matrix: &SignalMatrix, scores: &ScoreTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["as_of", "ticker", "decision", "score"])?;
    for (m, row) in matrix.months.iter().zip(matrix.rows()) {
        for (t, d) in matrix.tickers.iter().zip(row) {
            let score = scores.get(m).and_then(|s| s.get(t)).map(|s| s.to_string()).unwrap_or_default();
            w.write_record([m.to_string(), t.clone(), d.value().to_string(), score])?;
        }
    }
    finish(path, w)
}

pub fn load_caps(path: impl AsRef<Path>) -> Result<CapTable> {
    let path = path.as_ref();
    let mut by_date: BTreeMap<NaiveDate, BTreeMap<String, f64>> = BTreeMap::new();
    for (line, f) in rows(path, &["as_of", "ticker", "market_cap"])? {
        let d = parse_date(path, line, &f[0])?;
        let v = parse_f64(path, line, &f[2])?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Validation { path: path.into(), line, message: format!("market cap {v} must be positive") });
        }
        if by_date.entry(d).or_default().insert(f[1].clone(), v).is_some() {
            return Err(Error::Integrity { path: path.into(), line, message: format!("duplicate cap for ({d}, {})", f[1]) });
        }
    }
    CapTable::new(by_date)
}

pub fn write_caps(caps: &CapTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["as_of", "ticker", "market_cap"])?;
    for (d, row) in caps.entries() {
        for (t, v) in row {
            w.write_record([d.to_string(), t.clone(), v.to_string()])?;
        }
    }
    finish(path, w)
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line() as u64, e.to_string()))
}

/// Pretty JSON with a trailing newline. Output is a pure function of `value`.
pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(&to_json_bytes(value)?, path)
}

pub fn write_bytes(bytes: &[u8], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    create(path)?.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn load_descriptions(path: impl AsRef<Path>) -> Result<Vec<StockDescription>> {
    let path = path.as_ref();
    let descriptions: Vec<StockDescription> = read_json(path)?;
    let mut seen = BTreeSet::new();
    for d in &descriptions {
        if !seen.insert(d.ticker.as_str()) {
            return Err(Error::Integrity { path: path.into(), line: 0, message: format!("duplicate description for {}", d.ticker) });
        }
    }
    Ok(descriptions)
}

pub fn load_news(path: impl AsRef<Path>) -> Result<Vec<NewsArticle>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| parse_err(path, i as u64 + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_news(articles: &[NewsArticle], path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::new();
    for a in articles {
        bytes.extend(serde_json::to_vec(a)?);
        bytes.push(b'\n');
    }
    write_bytes(&bytes, path)
}

pub fn load_fundamentals(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<QuarterlyReport>>> {
    read_json(path)
}

/// Reads `YYYY-MM-DD-<name>.txt` reports, ordered by file name.
pub fn load_macro_dir(dir: impl AsRef<Path>) -> Result<Vec<(NaiveDate, MacroReport)>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let date = stem
                .get(..10)
                .and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok())
                .ok_or_else(|| parse_err(&p, 0, "file name must start with a YYYY-MM-DD date"))?;
            let name = stem.get(11..).filter(|s| !s.is_empty()).unwrap_or(&stem).to_string();
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            Ok((date, MacroReport { name, text }))
        })
        .collect()
}

/// One ticker per line; blank lines and `#` comments are ignored.
pub fn load_universe(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        if !seen.insert(t.to_string()) {
            return Err(Error::Integrity { path: path.into(), line: i as u64 + 1, message: format!("{t} listed twice") });
        }
        out.push(t.to_string());
    }
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read(path).map(|b| sha256_hex(&b)).map_err(|e| Error::io(path, e))
}
