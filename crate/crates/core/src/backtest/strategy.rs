//! The twelve strategy definitions and their configuration form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_COST_BPS: f64 = 5.0;
pub const DEFAULT_TOP_N: usize = 10;
pub const DEFAULT_THRESHOLD: u8 = 7;
pub const DEFAULT_MA_WINDOW: usize = 200;
/// Trailing Sharpe lookback in trading days.
pub const DEFAULT_LOOKBACK_DAYS: usize = 252;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Equal,
    Capitalization,
}

/// Selection rule of a strategy. Parameters only exist where the rule uses them.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// Long buys, short sells, equal absolute weight.
    Ms,
    MsL,
    MsLCap,
    MsTopSharpe { n: usize, lookback_days: usize },
    Sp100Eq,
    /// Index prices when `benchmark` is in the panel, else cap weights over the universe.
    Sp100 { benchmark: Option<String> },
    Naive { ma_window: usize, fully_allocated: bool },
    NaiveTop { n: usize, ma_window: usize, lookback_days: usize },
    MsTopGpt { n: usize },
    /// Score strictly above the threshold.
    MsHighGpt { threshold: u8 },
    /// Score at or below the threshold.
    MsLowGpt { threshold: u8 },
    MsTopCapGpt { n: usize },
}

impl Rule {
    pub fn name(&self) -> String {
        match self {
            Rule::Ms => "MS".into(),
            Rule::MsL => "MS-L".into(),
            Rule::MsLCap => "MS-L-Cap".into(),
            Rule::MsTopSharpe { n, .. } => format!("MS-Top{n}-SR"),
            Rule::Sp100Eq => "SP100-Eq".into(),
            Rule::Sp100 { .. } => "SP100".into(),
            Rule::Naive { .. } => "Naive".into(),
            Rule::NaiveTop { n, .. } => format!("Naive-Top{n}"),
            Rule::MsTopGpt { n } => format!("MS-Top{n}-GPT"),
            Rule::MsHighGpt { .. } => "MS-High-GPT".into(),
            Rule::MsLowGpt { .. } => "MS-Low-GPT".into(),
            Rule::MsTopCapGpt { n } => format!("MS-Top{n}-Cap-GPT"),
        }
    }

    pub fn weighting(&self) -> Weighting {
        match self {
            Rule::MsLCap | Rule::Sp100 { .. } | Rule::MsTopCapGpt { .. } => Weighting::Capitalization,
            _ => Weighting::Equal,
        }
    }

    pub fn needs_scores(&self) -> bool {
        matches!(self, Rule::MsTopGpt { .. } | Rule::MsHighGpt { .. } | Rule::MsLowGpt { .. } | Rule::MsTopCapGpt { .. })
    }

    /// SP100 only needs caps without an index series, which is decided at build time.
    pub fn needs_caps(&self) -> bool {
        matches!(self, Rule::MsLCap | Rule::MsTopCapGpt { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StrategyDoc", into = "StrategyDoc")]
pub struct StrategySpec {
    pub rule: Rule,
    pub cost_bps: f64,
}

impl StrategySpec {
    pub fn new(rule: Rule, cost_bps: f64) -> Result<Self> {
        if !cost_bps.is_finite() || cost_bps < 0.0 {
            return Err(Error::Configuration(format!("cost_bps must be a non-negative number, got {cost_bps}")));
        }
        match &rule {
            Rule::MsTopSharpe { n, lookback_days } | Rule::NaiveTop { n, lookback_days, .. }
                if *n == 0 || *lookback_days < 2 =>
            {
                return Err(Error::Configuration(format!("{}: n must be >= 1 and lookback_days >= 2", rule.name())))
            }
            Rule::MsTopGpt { n } | Rule::MsTopCapGpt { n } if *n == 0 => {
                return Err(Error::Configuration(format!("{}: n must be >= 1", rule.name())))
            }
            Rule::MsHighGpt { threshold } | Rule::MsLowGpt { threshold } if *threshold > 10 => {
                return Err(Error::Configuration(format!("{}: threshold must be in 0..=10", rule.name())))
            }
            _ => {}
        }
        if let Rule::Naive { ma_window, .. } | Rule::NaiveTop { ma_window, .. } = &rule {
            if *ma_window == 0 {
                return Err(Error::Configuration(format!("{}: ma_window must be >= 1", rule.name())));
            }
        }
        Ok(Self { rule, cost_bps })
    }

    pub fn name(&self) -> String {
        self.rule.name()
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// One entry of every strategy with default parameters.
pub fn catalog(cost_bps: f64) -> Vec<StrategySpec> {
    [
        Rule::Ms,
        Rule::MsL,
        Rule::MsLCap,
        Rule::MsTopSharpe { n: DEFAULT_TOP_N, lookback_days: DEFAULT_LOOKBACK_DAYS },
        Rule::Sp100Eq,
        Rule::Sp100 { benchmark: None },
        Rule::Naive { ma_window: DEFAULT_MA_WINDOW, fully_allocated: true },
        Rule::NaiveTop { n: DEFAULT_TOP_N, ma_window: DEFAULT_MA_WINDOW, lookback_days: DEFAULT_LOOKBACK_DAYS },
        Rule::MsTopGpt { n: DEFAULT_TOP_N },
        Rule::MsHighGpt { threshold: DEFAULT_THRESHOLD },
        Rule::MsLowGpt { threshold: DEFAULT_THRESHOLD },
        Rule::MsTopCapGpt { n: DEFAULT_TOP_N },
    ]
    .into_iter()
    .map(|rule| StrategySpec { rule, cost_bps })
    .collect()
}

/// Parses `all` or a comma-separated list of strategy names with default parameters.
pub fn parse_strategy_list(list: &str, cost_bps: f64) -> Result<Vec<StrategySpec>> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(catalog(cost_bps));
    }
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| StrategySpec::try_from(StrategyDoc { name: name.to_string(), cost_bps: Some(cost_bps), ..Default::default() }))
        .collect()
}

/// Configuration form of a [`StrategySpec`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookback_days: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ma_window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fully_allocated: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<String>,
}

/// Splits `MS-Top10-GPT` style names into the family (`MS-TopN-GPT`) and N.
fn family(name: &str) -> (String, Option<usize>) {
    for (prefix, suffix) in [("MS-Top", "-SR"), ("Naive-Top", ""), ("MS-Top", "-Cap-GPT"), ("MS-Top", "-GPT")] {
        if let Some(mid) = name.strip_prefix(prefix).and_then(|r| r.strip_suffix(suffix)) {
            if let Ok(n) = mid.parse::<usize>() {
                return (format!("{prefix}N{suffix}"), Some(n));
            }
        }
    }
    (name.to_string(), None)
}

impl TryFrom<StrategyDoc> for StrategySpec {
    type Error = Error;

    fn try_from(doc: StrategyDoc) -> Result<Self> {
        let (fam, name_n) = family(&doc.name);
        let n = match (name_n, doc.n) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Configuration(format!("{}: name says N = {a} but n = {b}", doc.name)))
            }
            (a, b) => a.or(b),
        };
        let mut used = vec!["name", "cost_bps"];
        let top_n = n.unwrap_or(DEFAULT_TOP_N);
        if matches!(fam.as_str(), "MS-TopN-SR" | "Naive-TopN" | "MS-TopN-GPT" | "MS-TopN-Cap-GPT") {
            used.push("n");
        }
        let rule = match fam.as_str() {
            "MS" => Rule::Ms,
            "MS-L" => Rule::MsL,
            "MS-L-Cap" => Rule::MsLCap,
            "MS-TopN-SR" => {
                used.push("lookback_days");
                Rule::MsTopSharpe { n: top_n, lookback_days: doc.lookback_days.unwrap_or(DEFAULT_LOOKBACK_DAYS) }
            }
            "SP100-Eq" => Rule::Sp100Eq,
            "SP100" => {
                used.push("benchmark");
                Rule::Sp100 { benchmark: doc.benchmark.clone() }
            }
            "Naive" => {
                used.extend(["ma_window", "fully_allocated"]);
                Rule::Naive {
                    ma_window: doc.ma_window.unwrap_or(DEFAULT_MA_WINDOW),
                    fully_allocated: doc.fully_allocated.unwrap_or(true),
                }
            }
            "Naive-TopN" => {
                used.extend(["ma_window", "lookback_days"]);
                Rule::NaiveTop {
                    n: top_n,
                    ma_window: doc.ma_window.unwrap_or(DEFAULT_MA_WINDOW),
                    lookback_days: doc.lookback_days.unwrap_or(DEFAULT_LOOKBACK_DAYS),
                }
            }
            "MS-TopN-GPT" => Rule::MsTopGpt { n: top_n },
            "MS-TopN-Cap-GPT" => Rule::MsTopCapGpt { n: top_n },
            "MS-High-GPT" | "MS-Low-GPT" => {
                used.push("threshold");
                let threshold = doc.threshold.unwrap_or(DEFAULT_THRESHOLD);
                if fam == "MS-High-GPT" {
                    Rule::MsHighGpt { threshold }
                } else {
                    Rule::MsLowGpt { threshold }
                }
            }
            _ => return Err(Error::Configuration(format!("unknown strategy '{}'", doc.name))),
        };
        let given = [
            ("n", doc.n.is_some()),
            ("threshold", doc.threshold.is_some()),
            ("lookback_days", doc.lookback_days.is_some()),
            ("ma_window", doc.ma_window.is_some()),
            ("fully_allocated", doc.fully_allocated.is_some()),
            ("benchmark", doc.benchmark.is_some()),
        ];
        if let Some((param, _)) = given.iter().find(|(p, set)| *set && !used.contains(p)) {
            return Err(Error::Configuration(format!("{} does not take parameter '{param}'", doc.name)));
        }
        StrategySpec::new(rule, doc.cost_bps.unwrap_or(DEFAULT_COST_BPS))
    }
}

impl From<StrategySpec> for StrategyDoc {
    fn from(spec: StrategySpec) -> Self {
        let mut doc = StrategyDoc { name: spec.name(), cost_bps: Some(spec.cost_bps), ..Default::default() };
        match spec.rule {
            Rule::MsTopSharpe { lookback_days, .. } => doc.lookback_days = Some(lookback_days),
            Rule::Sp100 { benchmark } => doc.benchmark = benchmark,
            Rule::Naive { ma_window, fully_allocated } => {
                doc.ma_window = Some(ma_window);
                doc.fully_allocated = Some(fully_allocated);
            }
            Rule::NaiveTop { ma_window, lookback_days, .. } => {
                doc.ma_window = Some(ma_window);
                doc.lookback_days = Some(lookback_days);
            }
            Rule::MsHighGpt { threshold } | Rule::MsLowGpt { threshold } => doc.threshold = Some(threshold),
            _ => {}
        }
        doc
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategySpec::try_from(StrategyDoc { name: s.trim().to_string(), ..Default::default() })
    }
}
