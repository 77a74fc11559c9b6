//! Quarterly statements standardized into a side-by-side table, then summarized.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::llm::{self, CompletionRequest, LlmClient, Task};

pub const DEFAULT_QUARTERS: usize = 2;

const SYSTEM: &str = "You are a financial analyst who reviews a company's recent quarterly statements.";

const SCALES: [(f64, &str); 3] = [(1e9, "billion"), (1e6, "million"), (1e3, "thousand")];

/// Formats `x` as `"D billion"`, `"D million"`, `"D thousand"` or a plain
/// number, with `D` rounded to two decimals. The scale is chosen from `|x|`
/// before rounding, so 999,999,999.994 stays in millions.
pub fn abbreviate_number(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::InvalidNumber(x));
    }
    let abs = x.abs();
    for (scale, word) in SCALES {
        if abs >= scale {
            return Ok(format!("{:.2} {word}", x / scale));
        }
    }
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    Ok(match s {
        "-0" | "" => "0".to_string(),
        s => s.to_string(),
    })
}

/// Inverse of [`abbreviate_number`] up to rounding.
pub fn parse_abbreviated(s: &str) -> Option<f64> {
    let s = s.trim();
    let (num, scale) = match s.rsplit_once(' ') {
        Some((n, word)) => (n, SCALES.iter().find(|(_, w)| *w == word)?.0),
        None => (s, 1.0),
    };
    num.parse::<f64>().ok().map(|v| v * scale)
}

/// Calendar quarter, written `2023-Q3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuarterId {
    pub year: i32,
    pub quarter: u8,
}

impl QuarterId {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::InvalidArgument(format!("quarter {quarter} is not in 1..=4")));
        }
        Ok(Self { year, quarter })
    }

    pub fn next(self) -> Self {
        if self.quarter == 4 {
            Self { year: self.year + 1, quarter: 1 }
        } else {
            Self { year: self.year, quarter: self.quarter + 1 }
        }
    }

    pub fn end_date(self) -> NaiveDate {
        let first_of_next = match self.quarter {
            4 => NaiveDate::from_ymd_opt(self.year + 1, 1, 1),
            q => NaiveDate::from_ymd_opt(self.year, u32::from(q) * 3 + 1, 1),
        };
        first_of_next.expect("valid quarter") - chrono::Duration::days(1)
    }
}

impl fmt::Display for QuarterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-Q{}", self.year, self.quarter)
    }
}

impl FromStr for QuarterId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("'{s}' is not a quarter like 2023-Q3"));
        let (y, q) = s.split_once("-Q").ok_or_else(bad)?;
        Self::new(y.parse().map_err(|_| bad())?, q.parse().map_err(|_| bad())?)
    }
}

impl Serialize for QuarterId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QuarterId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statement {
    BalanceSheet,
    IncomeStatement,
    CashFlow,
}

impl Statement {
    pub const ALL: [Statement; 3] = [Statement::BalanceSheet, Statement::IncomeStatement, Statement::CashFlow];

    pub fn title(self) -> &'static str {
        match self {
            Statement::BalanceSheet => "Balance Sheet",
            Statement::IncomeStatement => "Income Statement",
            Statement::CashFlow => "Cash Flow",
        }
    }
}

/// Raw statements for one quarter. A `null` value is reported as `n/a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterlyReport {
    pub quarter: QuarterId,
    /// First date the filing could be used. Defaults to 45 days after quarter end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub available: Option<NaiveDate>,
    #[serde(default)]
    pub balance_sheet: BTreeMap<String, Option<f64>>,
    #[serde(default)]
    pub income_statement: BTreeMap<String, Option<f64>>,
    #[serde(default)]
    pub cash_flow: BTreeMap<String, Option<f64>>,
}

impl QuarterlyReport {
    pub fn statement(&self, s: Statement) -> &BTreeMap<String, Option<f64>> {
        match s {
            Statement::BalanceSheet => &self.balance_sheet,
            Statement::IncomeStatement => &self.income_statement,
            Statement::CashFlow => &self.cash_flow,
        }
    }

    pub fn available_on(&self) -> NaiveDate {
        self.available.unwrap_or_else(|| self.quarter.end_date() + chrono::Duration::days(45))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub statement: Statement,
    pub item: String,
    pub cells: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedFinancialTable {
    /// Oldest first.
    pub columns: Vec<QuarterId>,
    pub rows: Vec<TableRow>,
}

impl StandardizedFinancialTable {
    pub fn cell(&self, item: &str, quarter: QuarterId) -> Option<&str> {
        let col = self.columns.iter().position(|q| *q == quarter)?;
        self.rows.iter().find(|r| r.item == item).map(|r| r.cells[col].as_str())
    }

    /// One markdown table per statement.
    pub fn render(&self) -> String {
        let header: Vec<String> = self.columns.iter().map(QuarterId::to_string).collect();
        let mut out = String::new();
        for st in Statement::ALL {
            let rows: Vec<&TableRow> = self.rows.iter().filter(|r| r.statement == st).collect();
            if rows.is_empty() {
                continue;
            }
            out.push_str(&format!("#### {}\n| Item | {} |\n|---|{}\n", st.title(), header.join(" | "), "---|".repeat(header.len())));
            for r in rows {
                out.push_str(&format!("| {} | {} |\n", r.item, r.cells.join(" | ")));
            }
        }
        out
    }
}

/// Aligns the last `n_quarters` reports side by side, oldest to newest.
///
/// The selected quarters must be consecutive. An item missing from a quarter
/// shows as `n/a`; an item filed under different statements in different
/// quarters is an alignment error.
pub fn standardize_financials(reports: &[QuarterlyReport], n_quarters: usize) -> Result<StandardizedFinancialTable> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no quarterly reports".into()));
    }
    if n_quarters == 0 {
        return Err(Error::InvalidArgument("n_quarters must be at least 1".into()));
    }
    let mut sorted: Vec<&QuarterlyReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.quarter);
    if let Some(w) = sorted.windows(2).find(|w| w[0].quarter == w[1].quarter) {
        return Err(Error::InvalidInput(format!("quarter {} appears twice", w[0].quarter)));
    }
    let selected = &sorted[sorted.len().saturating_sub(n_quarters)..];
    if let Some(w) = selected.windows(2).find(|w| w[0].quarter.next() != w[1].quarter) {
        return Err(Error::Alignment(format!("quarters {} and {} are not consecutive", w[0].quarter, w[1].quarter)));
    }

    let mut placement: BTreeMap<&str, BTreeSet<Statement>> = BTreeMap::new();
    for report in selected {
        let mut here: BTreeMap<&str, BTreeSet<Statement>> = BTreeMap::new();
        for st in Statement::ALL {
            for item in report.statement(st).keys() {
                here.entry(item).or_default().insert(st);
            }
        }
        for (item, sts) in here {
            match placement.get(item) {
                Some(prev) if *prev != sts => {
                    return Err(Error::Alignment(format!(
                        "item '{item}' is filed under {:?} in {} but {:?} earlier",
                        sts, report.quarter, prev
                    )))
                }
                Some(_) => {}
                None => {
                    placement.insert(item, sts);
                }
            }
        }
    }

    let mut rows = Vec::new();
    for st in Statement::ALL {
        let items: BTreeSet<&str> = selected.iter().flat_map(|r| r.statement(st).keys().map(String::as_str)).collect();
        for item in items {
            let cells = selected
                .iter()
                .map(|r| match r.statement(st).get(item) {
                    Some(Some(v)) => abbreviate_number(*v),
                    _ => Ok("n/a".to_string()),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(TableRow { statement: st, item: item.to_string(), cells });
        }
    }
    Ok(StandardizedFinancialTable { columns: selected.iter().map(|r| r.quarter).collect(), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalsSummary {
    pub ticker: String,
    pub quarters_covered: Vec<QuarterId>,
    pub text: String,
}

pub fn fundamentals_prompt(ticker: &str, table: &StandardizedFinancialTable) -> String {
    let quarters: Vec<String> = table.columns.iter().map(QuarterId::to_string).collect();
    format!(
        "Company: {ticker}\nQuarters: {}\n\n### Financial Statements\n{}\n### Focus\nRecent trends in \
         profitability, revenue growth, debt levels and cash flow generation.\n\n{}\nCompare the quarters side \
         by side and write a concise bullet-point analysis of the most recent developments. Keep it factual and \
         unbiased and do not make an investment recommendation.\n",
        quarters.join(", "),
        table.render(),
        llm::stub::INSTRUCTIONS_HEADING
    )
}

pub fn summarize_fundamentals(
    ticker: &str,
    reports: &[QuarterlyReport],
    n_quarters: usize,
    client: &dyn LlmClient,
) -> Result<FundamentalsSummary> {
    let table = standardize_financials(reports, n_quarters)?;
    if table.rows.is_empty() {
        return Err(Error::EmptyInput(format!("{ticker}: statements contain no line items")));
    }
    let request = CompletionRequest::new(Task::Fundamentals, SYSTEM, fundamentals_prompt(ticker, &table));
    let text = llm::call(client, &request)?;
    Ok(FundamentalsSummary { ticker: ticker.to_string(), quarters_covered: table.columns, text: text.trim().to_string() })
}
