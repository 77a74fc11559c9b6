//! Shared state of one CLI invocation: resolved config, the manifest and the
//! single writer every output goes through.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use marketsense_core::calendar;
use marketsense_core::config::{files, EmbeddingProviderKind, LlmProvider, RunConfig};
use marketsense_core::io;
use marketsense_core::llm::{Bounded, LlmClient, SyntheticAnalyst};
use marketsense_core::manifest::{sha256_dir, RunManifest};
use marketsense_core::panel::PricePanel;
use marketsense_core::similarity::{CachedEmbedder, EmbeddingProvider, HashingEmbedder, StockDescription};
use marketsense_core::store::SummaryStore;
use serde::Serialize;

use crate::cli::Cli;

pub const STORE_DIR: &str = "store";
pub const MANIFEST_DIR: &str = "manifests";

pub struct Run {
    pub cfg: RunConfig,
    pub manifest: RunManifest,
    pub as_of: Option<NaiveDate>,
    pub samples: usize,
    pub strategies: Option<String>,
    command: &'static str,
    touched_store: bool,
}

impl Run {
    pub fn start(cli: &Cli) -> Result<Self> {
        let mut cfg = RunConfig::load(&cli.config).with_context(|| format!("loading config {}", cli.config.display()))?;
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let Some(n) = cli.samples {
            if n == 0 {
                bail!("--samples must be at least 1");
            }
            cfg.evaluation.n_samples = n;
        }
        if let Some(u) = &cli.universe {
            cfg.universe = u.clone();
        }
        if let Some(list) = &cli.strategies {
            cfg.strategy_specs(Some(list))?;
        }
        let manifest = RunManifest::new(cli.canonical(), cfg.fingerprint()?, cfg.seed);
        Ok(Self {
            samples: cfg.evaluation.n_samples,
            manifest,
            as_of: cli.as_of,
            strategies: cli.strategies.clone(),
            command: cli.command.name(),
            touched_store: false,
            cfg,
        })
    }

    pub fn out(&self) -> &Path {
        &self.cfg.output_dir
    }

    pub fn store(&mut self) -> SummaryStore {
        self.touched_store = true;
        SummaryStore::new(self.cfg.output_dir.join(STORE_DIR))
    }

    pub fn data(&self, name: &str) -> PathBuf {
        self.cfg.data_file(name)
    }

    /// Hashes an input into the manifest and returns its path.
    pub fn input(&mut self, label: &str, path: &Path) -> Result<PathBuf> {
        if !path.exists() {
            bail!("{label} not found at {}", path.display());
        }
        self.manifest.add_input(label, path)?;
        Ok(path.to_path_buf())
    }

    pub fn universe(&mut self) -> Result<Vec<String>> {
        let path = self.cfg.universe.clone();
        let tickers = io::load_universe(self.input("universe", &path)?)?;
        if tickers.is_empty() {
            bail!("universe {} lists no tickers", path.display());
        }
        Ok(tickers)
    }

    pub fn prices(&mut self) -> Result<PricePanel> {
        let panel = io::load_prices(self.input("prices", &self.data(files::PRICES))?)?;
        self.manifest.data_start = panel.calendar().first().copied();
        self.manifest.data_end = panel.calendar().last().copied();
        Ok(panel)
    }

    pub fn descriptions(&mut self) -> Result<Vec<StockDescription>> {
        Ok(io::load_descriptions(self.input("descriptions", &self.data(files::DESCRIPTIONS))?)?)
    }

    /// Months to process: `--as-of`, else the configured range.
    pub fn months(&self) -> Result<Vec<NaiveDate>> {
        if let Some(d) = self.as_of {
            return Ok(vec![d]);
        }
        match (self.cfg.pipeline.start, self.cfg.pipeline.end) {
            (Some(s), Some(e)) => Ok(calendar::month_ends(s, e)),
            _ => bail!("pass --as-of or set pipeline.start and pipeline.end in the config"),
        }
    }

    pub fn llm(&self) -> Result<Box<dyn LlmClient>> {
        let c = &self.cfg.llm;
        match c.provider {
            LlmProvider::Stub => Ok(Box::new(Bounded::new(SyntheticAnalyst::default(), c.max_in_flight))),
            #[cfg(feature = "openai")]
            LlmProvider::OpenAi => {
                let chat = marketsense_core::llm::openai::OpenAiChat::new(&c.endpoint, &c.model, &c.api_key_env, c.context_limit)?;
                Ok(Box::new(Bounded::new(chat, c.max_in_flight)))
            }
            #[cfg(not(feature = "openai"))]
            LlmProvider::OpenAi => bail!("llm.provider = \"openai\" needs a build with the `openai` feature"),
        }
    }

    pub fn embedder(&self) -> Result<Box<dyn EmbeddingProvider>> {
        let c = &self.cfg.embedding;
        match c.provider {
            EmbeddingProviderKind::Hashing => Ok(Box::new(CachedEmbedder::new(HashingEmbedder::new(c.dimension)?))),
            #[cfg(feature = "openai")]
            EmbeddingProviderKind::OpenAi => {
                let e = marketsense_core::llm::openai::OpenAiEmbeddings::new(&c.endpoint, &c.model, &c.api_key_env, c.dimension)?;
                Ok(Box::new(CachedEmbedder::new(e)))
            }
            #[cfg(not(feature = "openai"))]
            EmbeddingProviderKind::OpenAi => bail!("embedding.provider = \"openai\" needs a build with the `openai` feature"),
        }
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        io::write_bytes(bytes, self.out().join(rel))?;
        self.manifest.add_output(rel, bytes);
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        let bytes = io::to_json_bytes(value)?;
        self.write_bytes(rel, &bytes)
    }

    /// Records a per-stock failure; the run continues and exits nonzero.
    pub fn fail(&mut self, ticker: Option<&str>, as_of: Option<NaiveDate>, err: impl Display) {
        let who = match (ticker, as_of) {
            (Some(t), Some(d)) => format!("{t} {d}: "),
            (Some(t), None) => format!("{t}: "),
            (None, Some(d)) => format!("{d}: "),
            (None, None) => String::new(),
        };
        log::error!("{who}{err}");
        self.manifest.record_error(ticker, as_of, err.to_string());
    }

    /// Writes the manifest and maps recorded errors to the exit status.
    pub fn finish(mut self) -> Result<ExitCode> {
        if self.touched_store {
            let dir = self.out().join(STORE_DIR);
            if dir.is_dir() {
                let digest = sha256_dir(&dir)?;
                self.manifest.outputs.insert(STORE_DIR.to_string(), digest);
            }
        }
        let dir = self.out().join(MANIFEST_DIR);
        let mut manifest = self.manifest;
        manifest.seal();
        io::write_json(&manifest, dir.join(format!("{}.json", self.command)))?;
        if manifest.is_success() {
            Ok(ExitCode::SUCCESS)
        } else {
            let mut by_kind: BTreeMap<&str, usize> = BTreeMap::new();
            for e in &manifest.errors {
                *by_kind.entry(e.ticker.as_deref().unwrap_or("-")).or_default() += 1;
            }
            eprintln!("{}: {} error(s)", self.command, manifest.errors.len());
            for (who, n) in by_kind {
                eprintln!("  {who}: {n}");
            }
            Ok(ExitCode::FAILURE)
        }
    }
}
