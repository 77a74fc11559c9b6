//! `backtest`, `bootstrap`, `similarity-report` and `report`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use marketsense_core::backtest::report::{render_table, write_summary_csv, write_wealth_csv};
use marketsense_core::backtest::{run_strategies, PerformanceReport, StrategyInputs};
use marketsense_core::config::files;
use marketsense_core::evaluation::{bootstrap_evaluate, next_month_returns, BootstrapResult, Leg};
use marketsense_core::io::{self, DecisionCounts, SignalFile};
use marketsense_core::signal::{signal_component_similarity, Component, SimilarityStats};
use serde::{Deserialize, Serialize};

use crate::run::Run;
use crate::signals::{self, SIGNALS_CSV};

pub const BACKTEST_REPORTS: &str = "backtest/reports.json";
pub const BOOTSTRAP_FILE: &str = "bootstrap.json";
pub const SIMILARITY_FILE: &str = "similarity.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOutput {
    pub n_samples: usize,
    pub seed: u64,
    pub counts: DecisionCounts,
    pub results: Vec<BootstrapResult>,
    /// Legs without a single active signal.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Leg>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityOutput {
    pub signals: usize,
    pub components: BTreeMap<Component, SimilarityStats>,
}

fn component_label(c: Component) -> &'static str {
    match c {
        Component::News => "News",
        Component::PriceDynamics => "Price dynamics",
        Component::Fundamentals => "Fundamentals",
        Component::Macro => "Macro",
    }
}

fn signal_file(run: &mut Run) -> Result<SignalFile> {
    let path: PathBuf = run.cfg.signals.clone().unwrap_or_else(|| run.out().join(SIGNALS_CSV));
    if !path.exists() {
        bail!("signal grid {} not found; run `signal` first or set `signals` in the config", path.display());
    }
    let file = io::load_signals(run.input("signals", &path)?)?;
    Ok(file)
}

pub fn backtest(run: &mut Run) -> Result<()> {
    let specs = run.cfg.strategy_specs(run.strategies.as_deref())?;
    let file = signal_file(run)?;
    let panel = run.prices()?;
    let caps_path = run.data(files::CAPS);
    let caps = if caps_path.exists() { Some(io::load_caps(run.input("caps", &caps_path)?)?) } else { None };
    let inputs = StrategyInputs {
        scores: (!file.scores.is_empty()).then_some(&file.scores),
        caps: caps.as_ref(),
        risk: run.cfg.evaluation.risk_params(),
    };
    let mut reports: Vec<PerformanceReport> = Vec::with_capacity(specs.len());
    for (spec, r) in specs.iter().zip(run_strategies(&specs, &file.matrix, &panel, inputs)) {
        match r {
            Ok(r) => reports.push(r),
            Err(e) => run.fail(None, None, format!("strategy {}: {e}", spec.name())),
        }
    }
    let table = render_table(&reports);
    run.write_json(BACKTEST_REPORTS, &reports)?;
    let mut summary = Vec::new();
    write_summary_csv(&reports, &mut summary)?;
    run.write_bytes("backtest/summary.csv", &summary)?;
    let mut wealth = Vec::new();
    write_wealth_csv(&reports, &mut wealth)?;
    run.write_bytes("backtest/wealth.csv", &wealth)?;
    run.write_bytes("backtest/table.txt", table.as_bytes())?;
    print!("{table}");
    Ok(())
}

pub fn bootstrap(run: &mut Run) -> Result<()> {
    let file = signal_file(run)?;
    let panel = run.prices()?;
    let m = &file.matrix;
    let r = next_month_returns(&panel, &m.months, &m.tickers)?;
    let (n, seed) = (run.samples, run.cfg.seed);
    let counts = file.counts();
    let skipped: Vec<Leg> = Leg::ALL
        .into_iter()
        .filter(|leg| match leg {
            Leg::Long => counts.buy == 0,
            Leg::Short => counts.sell == 0,
            Leg::Both => counts.buy + counts.sell == 0,
        })
        .collect();
    for leg in &skipped {
        log::warn!("no active signals on the {leg} leg, skipping it");
    }
    let mut results = Vec::new();
    for detrend in [false, true] {
        for leg in Leg::ALL.into_iter().filter(|l| !skipped.contains(l)) {
            match bootstrap_evaluate(m, &r, leg, n, seed, detrend) {
                Ok(b) => results.push(b),
                Err(e) => run.fail(None, None, format!("{leg} leg, detrend {detrend}: {e}")),
            }
        }
    }
    let out = BootstrapOutput { n_samples: n, seed, counts, results, skipped };
    run.write_json(BOOTSTRAP_FILE, &out)?;
    print!("{}", render_bootstrap(&out));
    Ok(())
}

fn render_bootstrap(b: &BootstrapOutput) -> String {
    let mut s = format!("samples {}  seed {}  signals {}\n", b.n_samples, b.seed, b.counts);
    s.push_str("leg    detrend  observed_R  Q_R     observed_HR  Q_HR\n");
    for r in &b.results {
        let _ = writeln!(
            s,
            "{:<6} {:<8} {:>10.4}  {:>6.2}  {:>11.4}  {:>6.2}",
            r.leg.to_string(),
            if r.detrend { "yes" } else { "no" },
            r.observed_r,
            r.quantile_r,
            r.observed_hr,
            r.quantile_hr
        );
    }
    s
}

pub fn similarity(run: &mut Run) -> Result<()> {
    let months = signals::selected(run)?;
    let (signals, contexts): (Vec<_>, Vec<_>) =
        months.into_values().flatten().map(|r| (r.signal, r.context)).unzip();
    let embedder = run.embedder()?;
    let components = signal_component_similarity(&signals, &contexts, embedder.as_ref())?;
    let out = SimilarityOutput { signals: signals.len(), components };
    let text = render_similarity(&out);
    run.write_json(SIMILARITY_FILE, &out)?;
    run.write_bytes("similarity.txt", text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn render_similarity(s: &SimilarityOutput) -> String {
    let mut out = format!("{} explanations\ncomponent        mean    std     min     max     n\n", s.signals);
    let mut rows: Vec<_> = s.components.iter().collect();
    rows.sort_by(|a, b| b.1.mean.total_cmp(&a.1.mean));
    for (c, st) in rows {
        let std = st.std.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(
            out,
            "{:<16} {:.4}  {:<6}  {:.4}  {:.4}  {}",
            component_label(*c),
            st.mean,
            std,
            st.min,
            st.max,
            st.count
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct CombinedReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    backtest: Option<Vec<PerformanceReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    similarity: Option<SimilarityOutput>,
}

/// Returns false when no earlier run left anything to report.
pub fn report(run: &mut Run) -> Result<bool> {
    let out = run.out().to_path_buf();
    let read = |rel: &str| -> Result<Option<Vec<u8>>> {
        let p = out.join(rel);
        Ok(if p.exists() { Some(std::fs::read(p)?) } else { None })
    };
    let mut combined = CombinedReport { backtest: None, bootstrap: None, similarity: None };
    let mut text = String::new();
    if let Some(bytes) = read(BACKTEST_REPORTS)? {
        let reports: Vec<PerformanceReport> = serde_json::from_slice(&bytes)?;
        let _ = writeln!(text, "== Backtest ==\n{}", render_table(&reports));
        combined.backtest = Some(reports);
    }
    if let Some(bytes) = read(BOOTSTRAP_FILE)? {
        let b: BootstrapOutput = serde_json::from_slice(&bytes)?;
        let _ = writeln!(text, "== Bootstrap ==\n{}", render_bootstrap(&b));
        combined.bootstrap = Some(b);
    }
    if let Some(bytes) = read(SIMILARITY_FILE)? {
        let s: SimilarityOutput = serde_json::from_slice(&bytes)?;
        let _ = writeln!(text, "== Explanation similarity ==\n{}", render_similarity(&s));
        combined.similarity = Some(s);
    }
    if text.is_empty() {
        return Ok(false);
    }
    run.write_json("report.json", &combined)?;
    run.write_bytes("report.txt", text.as_bytes())?;
    print!("{text}");
    Ok(true)
}
