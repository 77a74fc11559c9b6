//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Runs with the stub model and the hashing
//! embedder only.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use chrono::NaiveDate;
use marketsense_core::backtest::{build_weights, run_backtest, Rule, ScoreTable, StrategyInputs, StrategySpec, WeightSchedule};
use marketsense_core::calendar::{month_end, next_month_end};
use marketsense_core::evaluation::{
    bootstrap_evaluate, detrend_returns, hit_ratio, next_month_returns, random_signal_matrix, signal_performance, Leg,
    MonthlyReturnMatrix, SignalMatrix,
};
use marketsense_core::io;
use marketsense_core::metrics::{correlation_matrix, cumulative_return, max_drawdown, risk_metrics, simple_returns, RiskParams};
use marketsense_core::panel::PricePanel;
use marketsense_core::signal::{signal_component_similarity, Component};
use marketsense_core::similarity::{stock_universe, HashingEmbedder, DEFAULT_PEER_COUNT};
use marketsense_core::summarize::fundamentals::{abbreviate_number, parse_abbreviated};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn months(n: usize) -> Vec<NaiveDate> {
    (0..n)
        .map(|i| month_end(NaiveDate::from_ymd_opt(2022 + (i / 12) as i32, 1 + (i % 12) as u32, 1).unwrap()))
        .collect()
}

fn tickers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("T{i:02}")).collect()
}

fn day_of(panel: &PricePanel, d: NaiveDate) -> usize {
    panel.calendar().iter().rposition(|c| *c <= d).unwrap()
}

fn criterion_1() -> Outcome {
    const TOL: f64 = 1e-9;
    let close = |a: f64, b: f64| (a - b).abs() <= TOL * b.abs().max(1.0);
    let panel = common::synthetic_panel(5, 300, 11);
    let params = RiskParams { risk_free_rate: 0.02, periods_per_year: 252.0 };
    let mut worst = 0.0f64;
    for j in 0..5 {
        let prices = common::column(&panel, j);
        let r = common::returns_of(&prices);
        let m = risk_metrics(&r, params).map_err(|e| e.to_string())?;
        let pairs = [
            ("cumulative", cumulative_return(&r).unwrap(), common::cumulative_from_prices(&prices)),
            ("volatility", m.volatility, common::volatility(&r, 252.0)),
            ("sharpe", m.sharpe.unwrap(), common::sharpe(&r, 0.02, 252.0)),
            ("sortino", m.sortino.unwrap(), common::sortino(&r, 0.02, 252.0)),
            ("max drawdown", max_drawdown(&prices).unwrap(), common::max_drawdown_exhaustive(&prices)),
        ];
        for (name, got, want) in pairs {
            worst = worst.max((got - want).abs());
            ensure(close(got, want), || format!("T{j:02} {name}: {got} vs {want}"))?;
        }
    }
    let corr = correlation_matrix(&simple_returns(&panel).unwrap());
    for a in 0..5 {
        for b in 0..5 {
            let x = common::returns_of(&common::column(&panel, a));
            let y = common::returns_of(&common::column(&panel, b));
            let (got, want) = (corr.values[a][b].unwrap(), common::correlation(&x, &y));
            worst = worst.max((got - want).abs());
            ensure(close(got, want), || format!("corr[{a}][{b}]: {got} vs {want}"))?;
        }
    }
    Ok(format!("5 tickers x 300 days, max abs deviation {worst:.1e}"))
}

fn random_cells(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> (Vec<Vec<i64>>, Vec<Vec<Option<f64>>>) {
    let m = (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-1..=1)).collect()).collect();
    let r = (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_bool(0.9).then(|| rng.random_range(-0.3..0.3))).collect())
        .collect();
    (m, r)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (ms, ts) = (months(4), tickers(6));
    let mut checked = 0;
    for case in 0..1000 {
        let (m, r) = random_cells(&mut rng, 4, 6);
        let sig = SignalMatrix::from_values(ms.clone(), ts.clone(), &m).unwrap();
        let ret = MonthlyReturnMatrix::new(ms.clone(), ts.clone(), r.clone()).unwrap();
        for leg in Leg::ALL {
            match common::brute_hit_ratio(&m, &r, leg) {
                Some(hr) => {
                    let perf = signal_performance(&sig, &ret, leg).map_err(|e| format!("case {case} {leg}: {e}"))?;
                    let want = common::brute_performance(&m, &r, leg);
                    ensure((perf - want).abs() <= 1e-12, || format!("case {case} {leg}: R {perf} vs {want}"))?;
                    let got = hit_ratio(&sig, &ret, leg).unwrap();
                    ensure((got - hr).abs() <= 1e-12, || format!("case {case} {leg}: HR {got} vs {hr}"))?;
                    checked += 1;
                }
                None => ensure(signal_performance(&sig, &ret, leg).is_err(), || format!("case {case} {leg}: expected undefined"))?,
            }
        }
    }
    Ok(format!("1000 cases, {checked} defined leg evaluations within 1e-12"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let (rows, cols) = (rng.random_range(1..8), rng.random_range(2..12));
        let cells: Vec<Vec<Option<f64>>> =
            (0..rows).map(|_| (0..cols).map(|_| Some(rng.random_range(-0.3..0.3))).collect()).collect();
        let r = MonthlyReturnMatrix::new(months(rows), tickers(cols), cells).unwrap();
        let d = detrend_returns(&r).unwrap();
        for row in d.rows() {
            let mean = row.iter().flatten().sum::<f64>() / cols as f64;
            ensure(mean.abs() <= 1e-12, || format!("panel {case}: month mean {mean:e}"))?;
        }
        ensure(detrend_returns(&d).unwrap() == d, || format!("panel {case}: second detrend changed values"))?;
    }
    Ok("1000 panels, means within 1e-12, idempotent".into())
}

fn criterion_4() -> Outcome {
    let panel = common::synthetic_panel(40, 420, 4);
    let ms = months(18);
    let ts = panel.tickers().to_vec();
    let r = next_month_returns(&panel, &ms, &ts).unwrap();
    let d = detrend_returns(&r).unwrap();
    let optimal: Vec<Vec<i64>> = d
        .rows()
        .iter()
        .map(|row| row.iter().map(|v| v.map_or(0, |x| if x > 0.0 { 1 } else if x < 0.0 { -1 } else { 0 })).collect())
        .collect();
    let obs = SignalMatrix::from_values(ms.clone(), ts.clone(), &optimal).unwrap();
    let best = bootstrap_evaluate(&obs, &r, Leg::Both, 10_000, 99, true).map_err(|e| e.to_string())?;
    ensure(best.quantile_hr >= 99.9, || format!("optimal signals Q_HR {}", best.quantile_hr))?;
    let again = bootstrap_evaluate(&obs, &r, Leg::Both, 10_000, 99, true).unwrap();
    ensure(
        serde_json::to_vec(&best).unwrap() == serde_json::to_vec(&again).unwrap(),
        || "bootstrap not reproducible under a fixed seed".into(),
    )?;

    let cal_ms = months(12);
    let cal_panel = common::synthetic_panel(30, 300, 40);
    let cal_ts = cal_panel.tickers().to_vec();
    let cal_r = next_month_returns(&cal_panel, &cal_ms, &cal_ts).unwrap();
    let mut inside = 0;
    for trial in 0..100u64 {
        // Same generator as the bootstrap, on a stream the samples never use.
        let obs = random_signal_matrix(&cal_ms, &cal_ts, 1000 + trial, u64::MAX).unwrap();
        let b = bootstrap_evaluate(&obs, &cal_r, Leg::Both, 10_000, trial, true).map_err(|e| e.to_string())?;
        if (1.0..=99.0).contains(&b.quantile_r) && (1.0..=99.0).contains(&b.quantile_hr) {
            inside += 1;
        }
    }
    ensure(inside >= 95, || format!("only {inside}/100 random trials had both quantiles in [1, 99]"))?;
    Ok(format!("optimal Q_HR {:.2}, calibration {inside}/100 in [1, 99], reproducible", best.quantile_hr))
}

fn criterion_5() -> Outcome {
    // (a) single name, weight 1, no cost.
    let panel = common::synthetic_panel(1, 300, 3);
    let ms = months(10);
    let s = WeightSchedule::new(ms.clone(), panel.tickers().to_vec(), vec![vec![1.0]; 10]).unwrap();
    let r = run_backtest(&StrategySpec::new(Rule::MsL, 0.0).unwrap(), &s, &panel, RiskParams::default()).unwrap();
    let p0 = panel.price(day_of(&panel, ms[0]), 0).unwrap();
    let p1 = panel.price(day_of(&panel, next_month_end(ms[9])), 0).unwrap();
    let dev_a = (r.total_return_net - (p1 / p0 - 1.0)).abs();
    ensure(dev_a <= 1e-12, || format!("(a) buy-and-hold deviation {dev_a:e}"))?;

    // (b) enter one name, switch to the other: turnover 1 then 2.
    let panel = common::synthetic_panel(2, 80, 9);
    let s = WeightSchedule::new(months(2), panel.tickers().to_vec(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let free = run_backtest(&StrategySpec::new(Rule::MsL, 0.0).unwrap(), &s, &panel, RiskParams::default()).unwrap();
    let paid = run_backtest(&StrategySpec::new(Rule::MsL, 5.0).unwrap(), &s, &panel, RiskParams::default()).unwrap();
    let c = 5e-4;
    let w_free = 1.0 + free.total_return_net;
    let expected = w_free * (1.0 - (1.0 - c) * (1.0 - 2.0 * c));
    let dev_b = ((w_free - (1.0 + paid.total_return_net)) - expected).abs();
    ensure(dev_b <= 1e-12, || format!("(b) cost deviation {dev_b:e}"))?;

    // (c) High/Low split of MS-L.
    let panel = common::synthetic_panel(8, 200, 1);
    let ms = months(5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..200 {
        let cells: Vec<Vec<i64>> = (0..5).map(|_| (0..8).map(|_| rng.random_range(-1..=1)).collect()).collect();
        let signals = SignalMatrix::from_values(ms.clone(), panel.tickers().to_vec(), &cells).unwrap();
        let mut scores = ScoreTable::new();
        for (t, row) in cells.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                if *v == 1 {
                    scores.entry(ms[t]).or_default().insert(panel.tickers()[i].clone(), rng.random_range(0..=10));
                }
            }
        }
        let inputs = StrategyInputs { scores: Some(&scores), ..Default::default() };
        let build = |rule| build_weights(&StrategySpec::new(rule, 5.0).unwrap(), &signals, &panel, inputs).unwrap();
        let (all, high, low) = (build(Rule::MsL), build(Rule::MsHighGpt { threshold: 7 }), build(Rule::MsLowGpt { threshold: 7 }));
        for m in 0..ms.len() {
            let (h, l) = (high.holdings(m), low.holdings(m));
            let union: BTreeSet<&str> = h.union(&l).copied().collect();
            ensure(h.is_disjoint(&l) && union == all.holdings(m), || format!("(c) case {case} month {m}: not a partition"))?;
            ensure(h.iter().all(|t| scores[&ms[m]][*t] > 7), || format!("(c) case {case}: High holds a score <= 7"))?;
        }
    }
    Ok(format!("(a) {dev_a:.1e}, (b) {dev_b:.1e}, (c) 200 scored fixtures partitioned"))
}

fn criterion_6() -> Outcome {
    ensure(DEFAULT_PEER_COUNT == 5, || format!("default peer count {DEFAULT_PEER_COUNT}"))?;
    let descriptions = common::description_fixture(50, 5);
    let provider = HashingEmbedder::default();
    for d in &descriptions {
        let got = stock_universe(&d.ticker, &descriptions, DEFAULT_PEER_COUNT, &provider).map_err(|e| e.to_string())?;
        ensure(got.iter().all(|p| p.ticker != d.ticker), || format!("{} selected itself", d.ticker))?;
        let want = common::exhaustive_peers(&d.ticker, &descriptions, &provider, DEFAULT_PEER_COUNT);
        let same = got.len() == want.len()
            && got.iter().zip(&want).all(|(g, (t, s))| &g.ticker == t && (g.similarity - s).abs() < 1e-12);
        ensure(same, || format!("{}: peers differ from the exhaustive sort", d.ticker))?;
    }
    Ok("50 queries match the exhaustive sort, no self-selection, n = 5".into())
}

fn criterion_7() -> Outcome {
    let scale = |x: f64| match x {
        a if a >= 1e9 => 1e9,
        a if a >= 1e6 => 1e6,
        a if a >= 1e3 => 1e3,
        _ => 1.0,
    };
    let text = abbreviate_number(22.96e9).map_err(|e| e.to_string())?;
    ensure(text == "22.96 billion", || format!("22.96e9 formats as '{text}'"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let x = 10f64.powf(rng.random_range(0.0..13.0));
        let back = parse_abbreviated(&abbreviate_number(x).unwrap()).ok_or_else(|| format!("{x} does not parse back"))?;
        let rel = (back - x).abs() / scale(x);
        worst = worst.max(rel);
        ensure(rel <= 0.005 * (1.0 + 1e-9), || format!("{x} -> {back}"))?;
    }
    Ok(format!("'22.96 billion', 10000 magnitudes, worst error {:.3}% of scale", worst * 100.0))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn marketsense(config: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_marketsense"))
        .args(args)
        .arg("--config")
        .arg(config)
        .env("RUST_LOG", "error")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("`{}` exited {}: {}", args.join(" "), out.status, String::from_utf8_lossy(&out.stderr))
    })
}

/// Config in `dir` that reads the named fixture in place.
fn config_for(dir: &Path, name: &str) -> PathBuf {
    let src = fixture(name);
    let mut text = std::fs::read_to_string(src.join("config.toml")).unwrap();
    let data = src.display().to_string();
    text = text
        .replace("universe = \"universe.txt\"", &format!("universe = {:?}", format!("{data}/universe.txt")))
        .replace("data_dir = \".\"", &format!("data_dir = {data:?}"))
        .replace("signals = \"signals.csv\"", &format!("signals = {:?}", format!("{data}/signals.csv")));
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const STRATEGY_CATALOG: [&str; 12] = [
    "MS",
    "MS-L",
    "MS-L-Cap",
    "MS-Top10-SR",
    "SP100-Eq",
    "SP100",
    "Naive",
    "Naive-Top10",
    "MS-Top10-GPT",
    "MS-High-GPT",
    "MS-Low-GPT",
    "MS-Top10-Cap-GPT",
];

fn criterion_8() -> Outcome {
    let counts = io::load_signals(fixture("grid100").join("signals.csv")).map_err(|e| e.to_string())?.counts();
    ensure((counts.buy, counts.hold, counts.sell) == (338, 1150, 12), || format!("fixture has {counts}"))?;
    let dir = tempfile::tempdir().unwrap();
    marketsense(&config_for(dir.path(), "grid100"), &["backtest", "--strategies", "all"])?;
    let reports: Vec<serde_json::Value> = io::read_json(dir.path().join("out/backtest/reports.json")).map_err(|e| e.to_string())?;
    let names: Vec<&str> = reports.iter().filter_map(|r| r["strategy"].as_str()).collect();
    ensure(names == STRATEGY_CATALOG, || format!("strategies {names:?}"))?;
    Ok(format!("{counts}, {} strategy reports", names.len()))
}

const PIPELINE: [&str; 8] = [
    "summarize-news",
    "summarize-fundamentals",
    "summarize-dynamics",
    "summarize-macro",
    "signal",
    "rank",
    "backtest",
    "bootstrap",
];

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_9() -> Outcome {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for dir in &runs {
        let config = config_for(dir.path(), "demo");
        for cmd in PIPELINE {
            marketsense(&config, &[cmd])?;
        }
    }
    let (a, b) = (tree(&runs[0].path().join("out")), tree(&runs[1].path().join("out")));
    ensure(a.keys().eq(b.keys()), || "runs wrote different file sets".into())?;
    let differing: Vec<_> = a.iter().filter(|(k, v)| b[*k] != **v).map(|(k, _)| k.display().to_string()).collect();
    ensure(differing.is_empty(), || format!("files differ: {differing:?}"))?;
    let manifests = a.keys().filter(|k| k.starts_with("manifests")).count();
    ensure(manifests == PIPELINE.len(), || format!("{manifests} manifests"))?;
    Ok(format!("{} files byte-identical across two runs, {manifests} manifests", a.len()))
}

fn criterion_10() -> Outcome {
    let (signals, contexts) = common::component_overlap_fixture(40);
    let stats = signal_component_similarity(&signals, &contexts, &HashingEmbedder::default()).map_err(|e| e.to_string())?;
    let order = [Component::News, Component::PriceDynamics, Component::Fundamentals, Component::Macro];
    let means: Vec<f64> = order.iter().map(|c| stats[c].mean).collect();
    ensure(means.windows(2).all(|w| w[0] > w[1]), || format!("means {means:?}"))?;
    Ok(format!(
        "news {:.3} > dynamics {:.3} > fundamentals {:.3} > macro {:.3}",
        means[0], means[1], means[2], means[3]
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("metric oracle equivalence", criterion_1),
        ("performance and hit ratio enumeration", criterion_2),
        ("detrend properties", criterion_3),
        ("bootstrap sanity", criterion_4),
        ("backtest equivalences", criterion_5),
        ("peer selection equivalence", criterion_6),
        ("number abbreviation", criterion_7),
        ("fixture counts and strategy catalog", criterion_8),
        ("pipeline determinism", criterion_9),
        ("text similarity ordering", criterion_10),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({:.1}s)", i + 1, t.elapsed().as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", criteria.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
