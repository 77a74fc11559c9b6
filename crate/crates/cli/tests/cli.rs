use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Duration, NaiveDate};
use marketsense_core::io;
use marketsense_core::manifest::RunManifest;
use marketsense_core::store::SummaryStore;
use marketsense_core::summarize::{SummaryKey, SummaryKind};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    /// A config in a fresh directory reading the demo fixture in place.
    fn demo(extra: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let data = fixture("demo");
        let text = format!(
            "universe = {:?}\ndata_dir = {:?}\nseed = 42\n{extra}\n[evaluation]\nn_samples = 500\n\n[pipeline]\nstart = \"2023-01-31\"\nend = \"2023-04-30\"\n",
            data.join("universe.txt").display().to_string(),
            data.display().to_string(),
        );
        std::fs::write(dir.path().join("config.toml"), text).unwrap();
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_marketsense"))
            .args(args)
            .arg("--config")
            .arg(self.path("config.toml"))
            .env("RUST_LOG", "error")
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    fn manifest(&self, command: &str) -> RunManifest {
        io::read_json(self.path(&format!("out/manifests/{command}.json"))).unwrap()
    }

    fn summaries(&self) {
        for cmd in ["summarize-news", "summarize-fundamentals", "summarize-dynamics", "summarize-macro"] {
            self.ok(&[cmd]);
        }
    }
}

fn d(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

#[test]
fn report_without_prior_runs_is_a_usage_error() {
    let ws = Workspace::demo("");
    let out = ws.run(&["report"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nothing to report"));
}

#[test]
fn missing_config_fails_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_marketsense"))
        .args(["backtest", "--config", "/nonexistent/marketsense.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: loading config"), "{err}");
}

#[test]
fn unknown_strategy_is_rejected_before_any_work() {
    let ws = Workspace::demo("");
    let out = ws.run(&["backtest", "--strategies", "MS,Momentum"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Momentum"));
    assert!(!ws.path("out").exists());
}

#[cfg(not(feature = "openai"))]
#[test]
fn hosted_provider_needs_the_feature() {
    let ws = Workspace::demo("[llm]\nprovider = \"openai\"\n");
    let out = ws.run(&["summarize-macro"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`openai` feature"));
}

#[test]
fn one_bad_stock_does_not_stop_the_others() {
    let ws = Workspace::demo("");
    let universe = ws.path("universe.txt");
    let mut tickers = std::fs::read_to_string(fixture("demo").join("universe.txt")).unwrap();
    tickers.push_str("ZZZZ\n");
    std::fs::write(&universe, tickers).unwrap();
    let out = ws.run(&["summarize-fundamentals", "--as-of", "2023-02", "--universe", universe.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let m = ws.manifest("summarize-fundamentals");
    assert_eq!(m.errors.len(), 1);
    assert_eq!(m.errors[0].ticker.as_deref(), Some("ZZZZ"));
    let store = SummaryStore::new(ws.path("out/store"));
    assert_eq!(store.enumerate(SummaryKind::Fundamentals).unwrap().len(), 12);
}

#[test]
fn daily_summaries_cover_exactly_the_relevant_news_days() {
    let ws = Workspace::demo("");
    ws.ok(&["summarize-news", "--as-of", "2023-02"]);
    let articles = io::load_news(fixture("demo").join("news.jsonl")).unwrap();
    let names: BTreeMap<String, String> = io::load_descriptions(fixture("demo").join("descriptions.json"))
        .unwrap()
        .into_iter()
        .map(|d| (d.ticker, d.name.unwrap()))
        .collect();
    // February 2023 window: 28 days back from the month end.
    let (from, to) = (d("2023-01-31"), d("2023-02-28"));
    let mut want: BTreeMap<(String, NaiveDate), usize> = BTreeMap::new();
    for a in articles.iter().filter(|a| a.date > from && a.date <= to) {
        let text = format!("{} {}", a.title, a.body);
        if text.contains(&a.ticker) || text.contains(&names[&a.ticker]) {
            *want.entry((a.ticker.clone(), a.date)).or_default() += 1;
        }
    }
    let store = SummaryStore::new(ws.path("out/store"));
    let mut got = BTreeMap::new();
    for key in store.enumerate(SummaryKind::DailyNews).unwrap() {
        let doc = store.load(&key).unwrap();
        got.insert((key.ticker.clone().unwrap(), key.as_of), doc.lineage.source_count.unwrap());
    }
    assert_eq!(got, want);
}

#[test]
fn quiet_month_carries_the_progressive_summary_forward() {
    let ws = Workspace::demo("");
    ws.ok(&["summarize-news"]);
    let store = SummaryStore::new(ws.path("out/store"));
    let chain = store.chain(&SummaryKey::new(SummaryKind::ProgressiveNews, Some("LEDG"), d("2023-04-30"))).unwrap();
    let dates: Vec<NaiveDate> = chain.iter().map(|c| c.as_of).collect();
    assert_eq!(dates, [d("2023-04-30"), d("2023-03-31"), d("2023-02-28"), d("2023-01-31")]);
    assert_eq!(chain[1].text, chain[2].text, "LEDG has no March news");
    assert!(chain.last().unwrap().lineage.predecessor.is_none());
}

#[test]
fn signals_rank_and_backtest_from_the_summaries() {
    let ws = Workspace::demo("");
    ws.summaries();
    let out = ws.ok(&["signal"]);
    assert_eq!(out.lines().count(), 4, "{out}");
    ws.ok(&["rank"]);

    let grid = io::load_signals(ws.path("out/signals.csv")).unwrap();
    assert_eq!(grid.matrix.months.len(), 4);
    assert_eq!(grid.counts().total(), 48);
    let scored: usize = grid.scores.values().map(BTreeMap::len).sum();
    assert_eq!(scored, grid.counts().buy, "every buy gets a score");

    let records: Vec<Value> = io::read_json(ws.path("out/signals/2023-04-30.json")).unwrap();
    assert!(records.iter().all(|r| r["context"]["macro_env"].is_null()), "no macro reports in April");
    let march: Vec<Value> = io::read_json(ws.path("out/signals/2023-03-31.json")).unwrap();
    assert!(march.iter().all(|r| r["context"]["macro_env"].is_string()));

    let table = ws.ok(&["backtest", "--strategies", "MS-L,SP100"]);
    assert_eq!(table.lines().count(), 3, "{table}");
    let reports: Vec<Value> = io::read_json(ws.path("out/backtest/reports.json")).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[1]["strategy"], "SP100");
    let m = ws.manifest("backtest");
    assert_eq!(m.command, "backtest --strategies MS-L,SP100");
    assert!(m.inputs.contains_key("signals") && m.inputs.contains_key("prices"));
    assert_eq!(m.outputs["backtest/reports.json"], io::sha256_file(ws.path("out/backtest/reports.json")).unwrap());
}

#[test]
fn bootstrap_echoes_samples_and_seed_and_skips_empty_legs() {
    let ws = Workspace::demo("");
    ws.summaries();
    ws.ok(&["signal"]);
    let text = ws.ok(&["bootstrap", "--samples", "300", "--seed", "9"]);
    assert!(text.starts_with("samples 300  seed 9"), "{text}");
    let b: Value = io::read_json(ws.path("out/bootstrap.json")).unwrap();
    assert_eq!((b["n_samples"].as_u64(), b["seed"].as_u64()), (Some(300), Some(9)));
    let sells = b["counts"]["sell"].as_u64().unwrap();
    let legs: BTreeSet<&str> = b["results"].as_array().unwrap().iter().map(|r| r["leg"].as_str().unwrap()).collect();
    assert_eq!(legs.contains("short"), sells > 0);
    assert_eq!(ws.manifest("bootstrap").seed, 9);

    ws.ok(&["similarity-report", "--as-of", "2023-03"]);
    let s: Value = io::read_json(ws.path("out/similarity.json")).unwrap();
    assert_eq!(s["signals"], 12);
    let report = ws.ok(&["report"]);
    assert!(report.contains("== Bootstrap ==") && report.contains("== Explanation similarity =="));
    assert!(!report.contains("== Backtest =="));
}

#[test]
fn fundamentals_wait_for_the_filing_date() {
    let ws = Workspace::demo("");
    ws.ok(&["summarize-fundamentals", "--as-of", "2023-01"]);
    let store = SummaryStore::new(ws.path("out/store"));
    let doc = store.load(&SummaryKey::new(SummaryKind::Fundamentals, Some("NOVA"), d("2023-01-31"))).unwrap();
    // Q4 2022 statements are usable 45 days after the quarter, in mid-February.
    let quarters: Vec<String> = doc.lineage.quarters.iter().map(ToString::to_string).collect();
    assert_eq!(quarters, ["2022-Q2", "2022-Q3"]);
    assert!(d("2022-12-31") + Duration::days(45) > d("2023-01-31"));
}
