//! Daily news summaries and the monthly progressive news summary.

use chrono::{Datelike, NaiveDate};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{SummaryKey, SummaryKind};
use crate::calendar;
use crate::error::{Error, Result};
use crate::llm::{self, estimate_tokens, CompletionRequest, LlmClient, Task};

const DAILY_SYSTEM: &str = "You are a financial analyst who condenses a company's daily news into a short factual digest.";
const PROGRESSIVE_SYSTEM: &str = "You are a financial analyst who maintains a running news summary for a stock.";

/// Headings the daily summary is asked to use, so the monthly prompt can keep
/// facts and opinions apart.
pub const FACTUAL_LABEL: &str = "Factual news:";
pub const OPINION_LABEL: &str = "Analysts' opinions:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NewsKind {
    Factual,
    Opinion,
}

/// One line of the news JSON-lines input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsArticle {
    pub ticker: String,
    pub date: NaiveDate,
    pub title: String,
    pub body: String,
    pub kind: NewsKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyNewsSummary {
    pub ticker: String,
    pub date: NaiveDate,
    pub text: String,
    pub source_article_count: usize,
    #[serde(default)]
    pub opinion_article_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressiveNewsSummary {
    pub ticker: String,
    pub as_of: NaiveDate,
    pub text: String,
    pub window_days: u32,
    pub predecessor: Option<SummaryKey>,
}

impl ProgressiveNewsSummary {
    pub fn key(&self) -> SummaryKey {
        SummaryKey::new(SummaryKind::ProgressiveNews, Some(&self.ticker), self.as_of)
    }
}

/// News window of one calendar month ending at `as_of`.
pub fn default_window_days(as_of: NaiveDate) -> u32 {
    if as_of == calendar::month_end(as_of) {
        return as_of.day();
    }
    (as_of - calendar::months_before(as_of, 1)).num_days() as u32
}

const BOILERPLATE: [&str; 10] = [
    "click here",
    "subscribe",
    "sign up",
    "read more",
    "advertisement",
    "all rights reserved",
    "cookie",
    "follow us",
    "newsletter",
    "sponsored",
];

/// Strips boilerplate lines and drops articles that never mention the company.
///
/// An article is relevant when its title or body contains the ticker symbol
/// (without exchange suffix) as a whole word, or the company name in any case.
pub fn clean_articles(articles: &[NewsArticle], ticker: &str, company: Option<&str>) -> Vec<NewsArticle> {
    let symbol = ticker.split('.').next().unwrap_or(ticker);
    let symbol_re = Regex::new(&format!(r"\b{}\b", regex::escape(symbol))).expect("escaped symbol");
    let company = company.map(str::to_lowercase);
    articles
        .iter()
        .filter(|a| a.ticker == ticker)
        .filter_map(|a| {
            let body = a
                .body
                .lines()
                .filter(|l| {
                    let lower = l.to_lowercase();
                    !BOILERPLATE.iter().any(|b| lower.contains(b))
                })
                .collect::<Vec<_>>()
                .join("\n");
            let text = format!("{}\n{}", a.title, body);
            let mentions = symbol_re.is_match(&text)
                || company.as_ref().is_some_and(|c| text.to_lowercase().contains(c.as_str()));
            (mentions && !body.trim().is_empty()).then(|| NewsArticle { body, ..a.clone() })
        })
        .collect()
}

pub fn daily_news_prompt(articles: &[NewsArticle], ticker: &str, date: NaiveDate) -> String {
    let mut prompt = format!("Company: {ticker}\nDate: {date}\n");
    for (heading, kind) in [("Factual News", NewsKind::Factual), ("Analysts' Opinions", NewsKind::Opinion)] {
        let group: Vec<&NewsArticle> = articles.iter().filter(|a| a.kind == kind).collect();
        if group.is_empty() {
            continue;
        }
        prompt.push_str(&format!("\n### {heading}\n"));
        for (i, a) in group.iter().enumerate() {
            prompt.push_str(&format!("[{}] {}\n{}\n", i + 1, a.title.trim(), a.body.trim()));
        }
    }
    prompt.push_str(&format!(
        "\n{}\nSummarize the developments concerning {ticker} reported on {date} in a few concise sentences. \
         Keep factual news and analysts' opinions separate, under the headings \"{FACTUAL_LABEL}\" and \
         \"{OPINION_LABEL}\". Leave out anything unrelated to the company.\n",
        llm::stub::INSTRUCTIONS_HEADING
    ));
    prompt
}

/// One summary for `(ticker, date)`. No articles means an empty summary and no model call.
pub fn summarize_daily_news(
    articles: &[NewsArticle],
    ticker: &str,
    date: NaiveDate,
    client: &dyn LlmClient,
) -> Result<DailyNewsSummary> {
    if let Some(a) = articles.iter().find(|a| a.ticker != ticker || a.date != date) {
        return Err(Error::InvalidInput(format!(
            "article '{}' is for {} on {}, expected {ticker} on {date}",
            a.title, a.ticker, a.date
        )));
    }
    let opinion_article_count = articles.iter().filter(|a| a.kind == NewsKind::Opinion).count();
    if articles.is_empty() {
        return Ok(DailyNewsSummary {
            ticker: ticker.to_string(),
            date,
            text: String::new(),
            source_article_count: 0,
            opinion_article_count,
        });
    }
    let request = CompletionRequest::new(Task::DailyNews, DAILY_SYSTEM, daily_news_prompt(articles, ticker, date));
    let text = llm::call(client, &request)?;
    Ok(DailyNewsSummary {
        ticker: ticker.to_string(),
        date,
        text: text.trim().to_string(),
        source_article_count: articles.len(),
        opinion_article_count,
    })
}

/// Splits a daily summary into its factual and opinion parts.
///
/// Unlabelled text counts as factual unless every source article was an opinion.
pub fn split_daily(daily: &DailyNewsSummary) -> (String, String) {
    let lower = daily.text.to_lowercase();
    let f = lower.find(&FACTUAL_LABEL.to_lowercase());
    let o = lower.find(&OPINION_LABEL.to_lowercase());
    let take = |from: usize, label: &str, to: usize| daily.text[from + label.len()..to].trim().to_string();
    match (f, o) {
        (None, None) => {
            if daily.source_article_count > 0 && daily.opinion_article_count == daily.source_article_count {
                (String::new(), daily.text.trim().to_string())
            } else {
                (daily.text.trim().to_string(), String::new())
            }
        }
        (Some(f), None) => (take(f, FACTUAL_LABEL, daily.text.len()), String::new()),
        (None, Some(o)) => (String::new(), take(o, OPINION_LABEL, daily.text.len())),
        (Some(f), Some(o)) if f < o => (take(f, FACTUAL_LABEL, o), take(o, OPINION_LABEL, daily.text.len())),
        (Some(f), Some(o)) => (take(f, FACTUAL_LABEL, daily.text.len()), take(o, OPINION_LABEL, f)),
    }
}

pub fn progressive_prompt(
    prev: Option<&ProgressiveNewsSummary>,
    dailies: &[&DailyNewsSummary],
    ticker: &str,
    as_of: NaiveDate,
) -> String {
    let mut prompt = format!(
        "Company: {ticker}\nMonth: {} {}\n\n### Current Summary\n",
        month_name(as_of),
        as_of.year()
    );
    match prev {
        Some(p) => prompt.push_str(&format!("As of {}:\n{}\n", p.as_of, p.text.trim())),
        None => prompt.push_str("No prior summary: this is the first month of coverage.\n"),
    }
    prompt.push_str("\n### Daily News Summary\n");
    let (mut facts, mut opinions) = (String::new(), String::new());
    for d in dailies {
        let (f, o) = split_daily(d);
        if !f.is_empty() {
            facts.push_str(&format!("- {}: {}\n", d.date, f));
        }
        if !o.is_empty() {
            opinions.push_str(&format!("- {}: {}\n", d.date, o));
        }
    }
    for (heading, body) in [("Factual News", facts), ("Analysts' Opinions", opinions)] {
        prompt.push_str(&format!("#### {heading}\n"));
        prompt.push_str(if body.is_empty() { "- none\n" } else { &body });
    }
    prompt.push_str(&format!(
        "\n{}\nUpdate the current summary of {ticker} with this month's daily news. Integrate the most \
         pertinent information, keep earlier developments that remain significant and drop those that no \
         longer matter. Distinguish factual news from analysts' opinions. Return only the updated summary.\n",
        llm::stub::INSTRUCTIONS_HEADING
    ));
    prompt
}

fn month_name(date: NaiveDate) -> &'static str {
    const NAMES: [&str; 12] = [
        "January", "February", "March", "April", "May", "June", "July", "August", "September", "October",
        "November", "December",
    ];
    NAMES[date.month0() as usize]
}

/// Folds the month's daily summaries into the previous progressive summary.
///
/// Dailies older than the client's context budget allows are dropped
/// oldest-first. A month without news carries the previous text forward
/// without calling the model.
pub fn update_progressive_summary(
    prev: Option<&ProgressiveNewsSummary>,
    dailies: &[DailyNewsSummary],
    as_of: NaiveDate,
    window_days: u32,
    client: &dyn LlmClient,
) -> Result<ProgressiveNewsSummary> {
    if window_days == 0 {
        return Err(Error::InvalidArgument("news window must be at least one day".into()));
    }
    let ticker = match (prev, dailies.first()) {
        (_, Some(d)) => d.ticker.clone(),
        (Some(p), None) => p.ticker.clone(),
        (None, None) => return Err(Error::EmptyInput("no previous summary and no daily news".into())),
    };
    if let Some(d) = dailies.iter().find(|d| d.ticker != ticker) {
        return Err(Error::InvalidInput(format!("daily summaries mix tickers {ticker} and {}", d.ticker)));
    }
    if let Some(p) = prev {
        if p.ticker != ticker {
            return Err(Error::InvalidInput(format!("previous summary is for {}, not {ticker}", p.ticker)));
        }
        if p.as_of >= as_of {
            return Err(Error::InvalidInput(format!(
                "previous summary dated {} is not before {as_of}",
                p.as_of
            )));
        }
    }
    let window_start = as_of - chrono::Duration::days(i64::from(window_days));
    if let Some(d) = dailies.iter().find(|d| d.date <= window_start || d.date > as_of) {
        return Err(Error::InvalidInput(format!(
            "daily summary dated {} falls outside the {window_days}-day window ending {as_of}",
            d.date
        )));
    }

    let mut kept: Vec<&DailyNewsSummary> = dailies.iter().filter(|d| d.source_article_count > 0).collect();
    kept.sort_by_key(|d| d.date);
    let predecessor = prev.map(ProgressiveNewsSummary::key);

    if kept.is_empty() {
        let p = prev.ok_or_else(|| Error::EmptyInput(format!("no daily news for {ticker} in the window")))?;
        return Ok(ProgressiveNewsSummary {
            ticker,
            as_of,
            text: p.text.clone(),
            window_days,
            predecessor,
        });
    }

    let budget = client.context_limit_tokens();
    let mut prompt = progressive_prompt(prev, &kept, &ticker, as_of);
    while kept.len() > 1 && estimate_tokens(PROGRESSIVE_SYSTEM) + estimate_tokens(&prompt) > budget {
        let dropped = kept.remove(0);
        log::warn!(
            "{ticker} {as_of}: progressive prompt over {budget} tokens, dropping daily summary of {}",
            dropped.date
        );
        prompt = progressive_prompt(prev, &kept, &ticker, as_of);
    }
    let text = llm::call(client, &CompletionRequest::new(Task::ProgressiveNews, PROGRESSIVE_SYSTEM, prompt))?;
    Ok(ProgressiveNewsSummary {
        ticker,
        as_of,
        text: text.trim().to_string(),
        window_days,
        predecessor,
    })
}
