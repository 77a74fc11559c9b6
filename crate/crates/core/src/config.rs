//! Run configuration loaded from TOML.
//!
//! Relative paths are resolved against the directory of the config file when
//! it is loaded. Credentials are never read from the file itself: the
//! `[llm]` and `[embedding]` tables only name the environment variable that
//! holds the key.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::backtest::strategy::DEFAULT_COST_BPS;
use crate::backtest::{parse_strategy_list, Rule, StrategyDoc, StrategySpec};
use crate::error::{Error, Result};
use crate::evaluation::DEFAULT_SAMPLES;
use crate::metrics::RiskParams;
use crate::similarity::{HashingEmbedder, DEFAULT_PEER_COUNT};
use crate::summarize::fundamentals::DEFAULT_QUARTERS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmProvider {
    /// Deterministic offline analyst.
    Stub,
    OpenAi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmConfig {
    pub provider: LlmProvider,
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub context_limit: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            provider: LlmProvider::Stub,
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_in_flight: 8,
            context_limit: 8_192,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingProviderKind {
    /// Feature-hashing embedder, no network.
    Hashing,
    OpenAi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    pub provider: EmbeddingProviderKind,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    pub dimension: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            provider: EmbeddingProviderKind::Hashing,
            endpoint: "https://api.openai.com/v1".into(),
            model: "text-embedding-ada-002".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            dimension: HashingEmbedder::DEFAULT_DIMENSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub n_samples: usize,
    pub cost_bps: f64,
    pub risk_free_rate: f64,
    pub periods_per_year: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        let risk = RiskParams::default();
        Self {
            n_samples: DEFAULT_SAMPLES,
            cost_bps: DEFAULT_COST_BPS,
            risk_free_rate: risk.risk_free_rate,
            periods_per_year: risk.periods_per_year,
        }
    }
}

impl EvaluationConfig {
    pub fn risk_params(&self) -> RiskParams {
        RiskParams { risk_free_rate: self.risk_free_rate, periods_per_year: self.periods_per_year }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// First and last signal month (month ends). Unset means every month in the price data.
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub n_quarters: usize,
    /// Fixed news window; unset means one calendar month.
    pub news_window_days: Option<u32>,
    pub peer_count: usize,
    /// Price-dynamics look-back windows in months.
    pub windows: Vec<u32>,
    /// Show tickers next to explanations in the ranking prompt.
    pub include_names: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            start: None,
            end: None,
            n_quarters: DEFAULT_QUARTERS,
            news_window_days: None,
            peer_count: DEFAULT_PEER_COUNT,
            windows: vec![1, 3, 6, 12],
            include_names: false,
        }
    }
}

/// Strategies to backtest: `"all"` or a list of names / detailed entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategySelection {
    Keyword(String),
    List(Vec<StrategyEntry>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategyEntry {
    Name(String),
    Detailed(StrategyDoc),
}

impl Default for StrategySelection {
    fn default() -> Self {
        StrategySelection::Keyword("all".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Ticker list, one per line.
    pub universe: PathBuf,
    pub data_dir: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Signal grid for `backtest` and `bootstrap`; defaults to the one the
    /// `signal` and `rank` commands write into `output_dir`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<PathBuf>,
    /// Master seed for every random draw in the run.
    #[serde(default)]
    pub seed: u64,
    /// Benchmark ticker in the price file.
    #[serde(default = "default_index")]
    pub index: String,
    #[serde(default)]
    pub llm: LlmConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub strategies: StrategySelection,
    /// Directory relative paths were resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_index() -> String {
    "SPY".into()
}

/// Data files, by fixed name under `data_dir`.
pub mod files {
    pub const PRICES: &str = "prices.csv";
    pub const CAPS: &str = "caps.csv";
    pub const DESCRIPTIONS: &str = "descriptions.json";
    pub const NEWS: &str = "news.jsonl";
    pub const FUNDAMENTALS: &str = "fundamentals.json";
    pub const MACRO_DIR: &str = "macro";
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Configuration(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, validates and resolves paths relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Configuration(m) => Error::Configuration(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        self.base_dir = base.to_path_buf();
        for p in [&mut self.universe, &mut self.data_dir, &mut self.output_dir].into_iter().chain(self.signals.as_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Configuration(m));
        if self.evaluation.n_samples == 0 {
            return bad("evaluation.n_samples must be positive".into());
        }
        if !(self.evaluation.cost_bps.is_finite() && self.evaluation.cost_bps >= 0.0) {
            return bad(format!("evaluation.cost_bps must be non-negative, got {}", self.evaluation.cost_bps));
        }
        if !(self.evaluation.periods_per_year > 0.0) {
            return bad("evaluation.periods_per_year must be positive".into());
        }
        if self.pipeline.windows.is_empty() || self.pipeline.windows.contains(&0) {
            return bad("pipeline.windows must list positive month counts".into());
        }
        if self.pipeline.n_quarters == 0 || self.pipeline.peer_count == 0 {
            return bad("pipeline.n_quarters and pipeline.peer_count must be positive".into());
        }
        if let (Some(s), Some(e)) = (self.pipeline.start, self.pipeline.end) {
            if s > e {
                return bad(format!("pipeline.start {s} is after pipeline.end {e}"));
            }
        }
        if self.llm.max_in_flight == 0 {
            return bad("llm.max_in_flight must be positive".into());
        }
        for (table, var) in [("llm", &self.llm.api_key_env), ("embedding", &self.embedding.api_key_env)] {
            if var.is_empty() || !var.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return bad(format!("{table}.api_key_env must name an environment variable, got '{var}'"));
            }
        }
        self.strategy_specs(None)?;
        Ok(())
    }

    /// SHA-256 of the effective config with paths written relative to
    /// `base_dir`, so moving a project directory keeps its hash.
    pub fn fingerprint(&self) -> Result<String> {
        let mut c = self.clone();
        for p in [&mut c.universe, &mut c.data_dir, &mut c.output_dir].into_iter().chain(c.signals.as_mut()) {
            if let Ok(rel) = p.strip_prefix(&self.base_dir) {
                *p = rel.to_path_buf();
            }
        }
        Ok(crate::io::sha256_hex(&serde_json::to_vec(&c)?))
    }

    pub fn data_file(&self, name: &str) -> PathBuf {
        self.data_dir.join(name)
    }

    /// Strategies from the config, or from a `--strategies` override.
    pub fn strategy_specs(&self, override_list: Option<&str>) -> Result<Vec<StrategySpec>> {
        let cost = self.evaluation.cost_bps;
        let named = |name: &str| StrategySpec::try_from(StrategyDoc { name: name.to_string(), cost_bps: Some(cost), ..Default::default() });
        let selection = match override_list {
            Some(list) => StrategySelection::Keyword(list.to_string()),
            None => self.strategies.clone(),
        };
        let mut specs = match selection {
            StrategySelection::Keyword(k) => parse_strategy_list(&k, cost)?,
            StrategySelection::List(entries) => entries
                .into_iter()
                .map(|e| match e {
                    StrategyEntry::Name(n) => named(&n),
                    StrategyEntry::Detailed(mut doc) => {
                        doc.cost_bps.get_or_insert(cost);
                        StrategySpec::try_from(doc)
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        };
        if specs.is_empty() {
            return Err(Error::Configuration("no strategies selected".into()));
        }
        for s in &mut specs {
            if let Rule::Sp100 { benchmark: b @ None } = &mut s.rule {
                *b = Some(self.index.clone());
            }
        }
        Ok(specs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "universe = \"universe.txt\"\ndata_dir = \"data\"\n";

    #[test]
    fn defaults_fill_everything_else() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.evaluation.n_samples, 10_000);
        assert_eq!(cfg.evaluation.cost_bps, 5.0);
        assert_eq!(cfg.llm.provider, LlmProvider::Stub);
        assert_eq!(cfg.pipeline.peer_count, 5);
        assert_eq!(cfg.strategy_specs(None).unwrap().len(), 12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}[llm]\napi_key = \"sk-secret\"\n");
        assert!(matches!(RunConfig::parse(&text), Err(Error::Configuration(_))));
    }

    #[test]
    fn api_key_env_must_look_like_a_variable_name() {
        let text = format!("{MINIMAL}[llm]\napi_key_env = \"sk-abc.def\"\n");
        assert!(matches!(RunConfig::parse(&text), Err(Error::Configuration(_))));
    }

    #[test]
    fn paths_resolve_against_the_config_directory() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, MINIMAL).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.data_dir, dir.path().join("data"));
        assert_eq!(cfg.output_dir, dir.path().join("out"));
    }

    #[test]
    fn fingerprint_ignores_location_but_not_settings() {
        let mut a = RunConfig::parse(MINIMAL).unwrap();
        let mut b = a.clone();
        a.resolve_paths(Path::new("/one"));
        b.resolve_paths(Path::new("/two"));
        assert_eq!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
        b.seed = 8;
        assert_ne!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
    }

    #[test]
    fn sp100_uses_the_configured_index() {
        let cfg = RunConfig::parse(&format!("index = \"OEF\"\n{MINIMAL}")).unwrap();
        let specs = cfg.strategy_specs(Some("SP100")).unwrap();
        assert_eq!(specs[0].rule, Rule::Sp100 { benchmark: Some("OEF".into()) });
    }

    #[test]
    fn strategy_lists_mix_names_and_tables() {
        let text = format!(
            "{MINIMAL}strategies = [\"MS\", {{ name = \"MS-High-GPT\", threshold = 8 }}]\n[evaluation]\ncost_bps = 10\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let specs = cfg.strategy_specs(None).unwrap();
        assert_eq!(specs.len(), 2);
        assert!(specs.iter().all(|s| s.cost_bps == 10.0));
        assert_eq!(cfg.strategy_specs(Some("MS-L,SP100")).unwrap().len(), 2);
        assert!(cfg.strategy_specs(Some("Bogus")).is_err());
    }
}
