//! Monthly buy/hold/sell signals and the ranking of buy explanations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llm::{self, stub::INSTRUCTIONS_HEADING, CompletionRequest, LlmClient, Task};
use crate::similarity::{cosine_similarity, EmbeddingProvider};

pub const DEFAULT_HORIZON: &str = "one month";

const SIGNAL_SYSTEM: &str = "You are an expert financial analyst.";
const RANKING_SYSTEM: &str = "You are an expert portfolio manager reviewing buy recommendations.";

pub const SECTION_NEWS: &str = "News Analysis";
pub const SECTION_DYNAMICS: &str = "Price Dynamics Analysis";
pub const SECTION_MACRO: &str = "Macroeconomic Environment Analysis";
pub const SECTION_FUNDAMENTALS: &str = "Fundamentals Analysis";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Sell,
    Hold,
    Buy,
}

impl Decision {
    pub fn value(self) -> i8 {
        match self {
            Decision::Buy => 1,
            Decision::Hold => 0,
            Decision::Sell => -1,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Decision::Buy),
            0 => Ok(Decision::Hold),
            -1 => Ok(Decision::Sell),
            other => Err(Error::InvalidArgument(format!("decision {other} is not one of -1, 0, 1"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Buy => "BUY",
            Decision::Hold => "HOLD",
            Decision::Sell => "SELL",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "buy" => Ok(Decision::Buy),
            "hold" => Ok(Decision::Hold),
            "sell" => Ok(Decision::Sell),
            other => Decision::from_value(other.parse().map_err(|_| {
                Error::InvalidArgument(format!("'{s}' is not a decision"))
            })?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalContext {
    pub ticker: String,
    pub as_of: NaiveDate,
    pub news: String,
    pub fundamentals: String,
    pub dynamics: String,
    /// Absent for months without a macro summary.
    pub macro_env: Option<String>,
    pub horizon: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub ticker: String,
    pub as_of: NaiveDate,
    pub decision: Decision,
    pub explanation: String,
    pub raw_completion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSignal {
    pub signal: Signal,
    pub score: u8,
}

fn check_context(ctx: &SignalContext) -> Result<()> {
    for (name, text) in [
        ("news", &ctx.news),
        ("price dynamics", &ctx.dynamics),
        ("fundamentals", &ctx.fundamentals),
        ("horizon", &ctx.horizon),
    ] {
        if text.trim().is_empty() {
            return Err(Error::InvalidContext(format!("{} {}: {name} section is empty", ctx.ticker, ctx.as_of)));
        }
    }
    if ctx.macro_env.as_ref().is_some_and(|m| m.trim().is_empty()) {
        return Err(Error::InvalidContext(format!(
            "{} {}: macro section is present but empty",
            ctx.ticker, ctx.as_of
        )));
    }
    Ok(())
}

pub fn build_signal_prompt(ctx: &SignalContext) -> Result<String> {
    check_context(ctx)?;
    let mut p = format!("Stock: {}\nAs of: {}\nInvestment horizon: {}\n", ctx.ticker, ctx.as_of, ctx.horizon);
    if ctx.macro_env.is_none() {
        p.push_str("Macroeconomic analysis: not available for this period.\n");
    }
    let mut section = |name: &str, text: &str| p.push_str(&format!("\n### {name}\n{}\n", text.trim()));
    section(SECTION_NEWS, &ctx.news);
    section(SECTION_DYNAMICS, &ctx.dynamics);
    if let Some(m) = &ctx.macro_env {
        section(SECTION_MACRO, m);
    }
    section(SECTION_FUNDAMENTALS, &ctx.fundamentals);
    p.push_str(&format!(
        "\n{INSTRUCTIONS_HEADING}\nAs an expert financial analyst, assess {} over {} using the analyses above. \
         Think step by step: weigh the news, the price dynamics, the macroeconomic environment and the \
         fundamentals in turn, then combine them. Here \"buy\" means the stock should be held in a long \
         portfolio for the horizon, \"sell\" means it should be avoided, and \"hold\" means neither. Explain \
         your reasoning, then finish with a final line of exactly one of:\nDecision: BUY\nDecision: HOLD\nDecision: SELL\n",
        ctx.ticker, ctx.horizon
    ));
    Ok(p)
}

struct DecisionPatterns {
    line: Regex,
    token: Regex,
}

fn patterns() -> &'static DecisionPatterns {
    static P: std::sync::OnceLock<DecisionPatterns> = std::sync::OnceLock::new();
    P.get_or_init(|| DecisionPatterns {
        line: Regex::new(r"(?im)^[\s*_#>-]*(?:final\s+)?decision[\s*_]*[:\-][ \t]*(.*)$").expect("static regex"),
        token: Regex::new(r"(?i)\b(buy|hold|sell)\b").expect("static regex"),
    })
}

fn tokens_in(text: &str) -> BTreeSet<Decision> {
    patterns()
        .token
        .find_iter(text)
        .map(|m| m.as_str().parse().expect("regex only matches decisions"))
        .collect()
}

fn parse_error(reason: impl Into<String>, raw: &str) -> Error {
    Error::DecisionParse { reason: reason.into(), raw: raw.to_string() }
}

/// Reads the decision from a completion.
///
/// `Decision: <token>` lines win; if there are several they must agree. With
/// no such line, the last sentence containing letters must name exactly one
/// of buy, hold or sell as a whole word.
pub fn parse_decision(completion: &str) -> Result<Decision> {
    let pats = patterns();
    let lines: Vec<&str> = pats.line.captures_iter(completion).map(|c| c.get(1).map_or("", |m| m.as_str())).collect();
    let found = if lines.is_empty() {
        let last = completion
            .split(['.', '!', '?', '\n', '[', ']'])
            .filter(|s| s.chars().any(char::is_alphabetic))
            .next_back()
            .ok_or_else(|| parse_error("completion has no text", completion))?;
        tokens_in(last)
    } else {
        let mut all = BTreeSet::new();
        for l in lines {
            let t = tokens_in(l);
            if t.is_empty() {
                return Err(parse_error(format!("decision line '{}' names no decision", l.trim()), completion));
            }
            all.extend(t);
        }
        all
    };
    match found.len() {
        1 => Ok(*found.iter().next().expect("one element")),
        0 => Err(parse_error("no decision token", completion)),
        _ => Err(parse_error(
            format!("conflicting decision tokens: {}", found.iter().map(|d| d.as_str()).collect::<Vec<_>>().join(", ")),
            completion,
        )),
    }
}

/// The completion without its decision lines.
pub fn extract_explanation(completion: &str) -> String {
    patterns().line.replace_all(completion, "").trim().to_string()
}

pub fn generate_signal(ctx: &SignalContext, client: &dyn LlmClient) -> Result<Signal> {
    let prompt = build_signal_prompt(ctx)?;
    let raw = llm::call(client, &CompletionRequest::new(Task::Signal, SIGNAL_SYSTEM, prompt))?;
    let decision = parse_decision(&raw)?;
    let explanation = extract_explanation(&raw);
    if explanation.is_empty() && decision != Decision::Hold {
        return Err(parse_error(format!("{decision} without an explanation"), &raw));
    }
    Ok(Signal { ticker: ctx.ticker.clone(), as_of: ctx.as_of, decision, explanation, raw_completion: raw })
}

/// Signals for many stocks, in input order. Failures are reported per stock.
pub fn generate_signals(contexts: &[SignalContext], client: &dyn LlmClient) -> Vec<Result<Signal>> {
    contexts.par_iter().map(|c| generate_signal(c, client)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RankingOptions {
    /// Show tickers next to explanations.
    pub include_names: bool,
    /// Seeds the presentation order.
    pub seed: u64,
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn ranking_prompt(items: &[(String, &Signal)], include_names: bool) -> String {
    let mut p = String::from("### Buy Recommendations\n");
    for (id, s) in items {
        if include_names {
            p.push_str(&format!("[{id}] ({}) {}\n", s.ticker, one_line(&s.explanation)));
        } else {
            p.push_str(&format!("[{id}] {}\n", one_line(&s.explanation)));
        }
    }
    p.push_str(&format!(
        "\n{INSTRUCTIONS_HEADING}\nEach entry above explains why a stock is a buy for the coming month. Rate \
         every explanation on an integer scale from 0 to 10, where 10 indicates a strong buy. Answer with one \
         line per entry in the form \"S1: 7\" and nothing else.\n"
    ));
    p
}

fn parse_scores(text: &str) -> Result<BTreeMap<String, u8>> {
    static LINE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let re = LINE.get_or_init(|| Regex::new(r"(?m)^\W*(S\d+)\W*[:=\-]\s*(-?\d+)").expect("static regex"));
    let mut out = BTreeMap::new();
    for c in re.captures_iter(text) {
        let id = c[1].to_string();
        let score: i64 = c[2].parse().unwrap_or(i64::MAX);
        if !(0..=10).contains(&score) {
            return Err(Error::ScoreRange { id, score });
        }
        out.insert(id, score as u8);
    }
    Ok(out)
}

/// Scores one month's buy explanations in a single call.
///
/// Signals get stable ids `S1..Sn` in input order; the prompt lists them in a
/// seeded random order. Ids missing from the answer are asked for once more.
pub fn rank_buy_explanations(
    signals: &[Signal],
    client: &dyn LlmClient,
    options: RankingOptions,
) -> Result<Vec<RankedSignal>> {
    let Some(first) = signals.first() else {
        return Ok(Vec::new());
    };
    if let Some(s) = signals.iter().find(|s| s.decision != Decision::Buy) {
        return Err(Error::InvalidInput(format!("{} {} is {}, only BUY signals can be ranked", s.ticker, s.as_of, s.decision)));
    }
    if let Some(s) = signals.iter().find(|s| s.as_of != first.as_of) {
        return Err(Error::InvalidInput(format!("signals mix months {} and {}", first.as_of, s.as_of)));
    }
    let ids: Vec<String> = (1..=signals.len()).map(|i| format!("S{i}")).collect();
    let mut order: Vec<usize> = (0..signals.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    rng.set_stream(first.as_of.num_days_from_ce() as u64);
    order.shuffle(&mut rng);

    let ask = |idx: &[usize]| -> Result<BTreeMap<String, u8>> {
        let items: Vec<(String, &Signal)> = idx.iter().map(|&i| (ids[i].clone(), &signals[i])).collect();
        let req = CompletionRequest::new(Task::Ranking, RANKING_SYSTEM, ranking_prompt(&items, options.include_names));
        parse_scores(&llm::call(client, &req)?)
    };

    let mut scores = ask(&order)?;
    let missing: Vec<usize> = order.iter().copied().filter(|&i| !scores.contains_key(&ids[i])).collect();
    if !missing.is_empty() {
        log::warn!("{}: {} explanations unscored, asking again", first.as_of, missing.len());
        for (id, s) in ask(&missing)? {
            scores.entry(id).or_insert(s);
        }
        let still: Vec<String> = ids.iter().filter(|id| !scores.contains_key(*id)).cloned().collect();
        if !still.is_empty() {
            return Err(Error::Unscored(still));
        }
    }
    Ok(signals
        .iter()
        .zip(&ids)
        .map(|(s, id)| RankedSignal { signal: s.clone(), score: scores[id] })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    News,
    PriceDynamics,
    Fundamentals,
    Macro,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::News, Component::PriceDynamics, Component::Fundamentals, Component::Macro];

    fn text(self, ctx: &SignalContext) -> Option<&str> {
        match self {
            Component::News => Some(&ctx.news),
            Component::PriceDynamics => Some(&ctx.dynamics),
            Component::Fundamentals => Some(&ctx.fundamentals),
            Component::Macro => ctx.macro_env.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityStats {
    pub mean: f64,
    /// Sample standard deviation; undefined for a single observation.
    pub std: Option<f64>,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl SimilarityStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = (n > 1).then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        Some(Self {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            count: n,
        })
    }
}

/// Cosine similarity of each signal's explanation with each component text.
///
/// Components absent from a context (macro) are skipped for that signal.
pub fn signal_component_similarity(
    signals: &[Signal],
    contexts: &[SignalContext],
    provider: &dyn EmbeddingProvider,
) -> Result<BTreeMap<Component, SimilarityStats>> {
    if signals.len() != contexts.len() {
        return Err(Error::InvalidInput(format!("{} signals but {} contexts", signals.len(), contexts.len())));
    }
    if let Some((s, c)) = signals.iter().zip(contexts).find(|(s, c)| s.ticker != c.ticker || s.as_of != c.as_of) {
        return Err(Error::InvalidInput(format!(
            "signal {} {} is paired with context {} {}",
            s.ticker, s.as_of, c.ticker, c.as_of
        )));
    }
    let rows = signals
        .par_iter()
        .zip(contexts)
        .map(|(s, c)| {
            let text = if s.explanation.trim().is_empty() { &s.raw_completion } else { &s.explanation };
            let e = provider.embed(text)?;
            Component::ALL
                .iter()
                .filter_map(|&comp| comp.text(c).map(|t| (comp, t)))
                .map(|(comp, t)| Ok((comp, cosine_similarity(&e, &provider.embed(t)?)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_comp: BTreeMap<Component, Vec<f64>> = BTreeMap::new();
    for (comp, v) in rows.into_iter().flatten() {
        by_comp.entry(comp).or_default().push(v);
    }
    Ok(by_comp
        .into_iter()
        .filter_map(|(k, v)| SimilarityStats::from_values(&v).map(|s| (k, s)))
        .collect())
}
