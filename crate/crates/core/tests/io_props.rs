use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use marketsense_core::backtest::{CapTable, ScoreTable};
use marketsense_core::calendar::month_end;
use marketsense_core::evaluation::SignalMatrix;
use marketsense_core::io;
use marketsense_core::llm::SyntheticAnalyst;
use marketsense_core::panel::PricePanel;
use marketsense_core::similarity::StockDescription;
use marketsense_core::store::{SummaryDocument, SummaryStore};
use marketsense_core::summarize::news::{update_progressive_summary, DailyNewsSummary, NewsArticle, NewsKind};
use marketsense_core::summarize::{SummaryKey, SummaryKind};
use proptest::prelude::*;

fn day(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 1, 3).unwrap() + Duration::days(i as i64)
}

fn month(i: usize) -> NaiveDate {
    month_end(NaiveDate::from_ymd_opt(2022 + (i / 12) as i32, 1 + (i % 12) as u32, 1).unwrap())
}

fn ticker_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("T{i}")).collect()
}

fn price() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![8 => (0.01f64..5000.0).prop_map(Some), 1 => Just(None)]
}

fn panel() -> impl Strategy<Value = PricePanel> {
    (1usize..5, 1usize..12).prop_flat_map(|(k, n)| {
        prop::collection::vec(prop::collection::vec(price(), k), n)
            .prop_map(move |rows| PricePanel::new((0..n).map(day).collect(), ticker_names(k), rows).unwrap())
    })
}

fn text() -> impl Strategy<Value = String> {
    "[ -~]{0,40}"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prices_round_trip(p in panel()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prices.csv");
        io::write_prices(&p, &path).unwrap();
        let back = io::load_prices(&path).unwrap();
        // Tickers without a single price still appear, as all-gap columns.
        prop_assert_eq!(back, p);
    }

    #[test]
    fn signals_round_trip(cells in (1usize..6, 1usize..6).prop_flat_map(|(m, k)| prop::collection::vec(prop::collection::vec((-1i64..=1, 0u8..=10), k), m))) {
        let ms: Vec<NaiveDate> = (0..cells.len()).map(month).collect();
        let ts = ticker_names(cells[0].len());
        let values: Vec<Vec<i64>> = cells.iter().map(|r| r.iter().map(|c| c.0).collect()).collect();
        let matrix = SignalMatrix::from_values(ms.clone(), ts.clone(), &values).unwrap();
        let mut scores = ScoreTable::new();
        for (t, row) in cells.iter().enumerate() {
            for (i, (v, s)) in row.iter().enumerate() {
                if *v == 1 {
                    scores.entry(ms[t]).or_default().insert(ts[i].clone(), *s);
                }
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("signals.csv");
        io::write_signals(&matrix, &scores, &path).unwrap();
        let back = io::load_signals(&path).unwrap();
        prop_assert_eq!(&back.matrix, &matrix);
        prop_assert_eq!(&back.scores, &scores);
        let again = dir.path().join("again.csv");
        io::write_signals(&back.matrix, &back.scores, &again).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn caps_round_trip(values in prop::collection::vec(prop::collection::vec(1.0f64..1e13, 3), 1..4)) {
        let by_date: BTreeMap<NaiveDate, BTreeMap<String, f64>> = values
            .iter()
            .enumerate()
            .map(|(i, row)| (month(i), ticker_names(3).into_iter().zip(row.iter().copied()).collect()))
            .collect();
        let caps = CapTable::new(by_date).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("caps.csv");
        io::write_caps(&caps, &path).unwrap();
        prop_assert_eq!(io::load_caps(&path).unwrap(), caps);
    }

    #[test]
    fn news_round_trips(items in prop::collection::vec((text(), text(), any::<bool>()), 0..8)) {
        let articles: Vec<NewsArticle> = items
            .into_iter()
            .enumerate()
            .map(|(i, (title, body, opinion))| NewsArticle {
                ticker: "AAPL".into(),
                date: day(i),
                title,
                body,
                kind: if opinion { NewsKind::Opinion } else { NewsKind::Factual },
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("news.jsonl");
        io::write_news(&articles, &path).unwrap();
        prop_assert_eq!(io::load_news(&path).unwrap(), articles);
    }

    #[test]
    fn descriptions_round_trip(texts in prop::collection::vec(text(), 1..6)) {
        let ds: Vec<StockDescription> = texts.into_iter().enumerate().map(|(i, t)| StockDescription::new(format!("T{i}"), t)).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("descriptions.json");
        io::write_json(&ds, &path).unwrap();
        prop_assert_eq!(io::load_descriptions(&path).unwrap(), ds);
    }

    #[test]
    fn stored_documents_are_byte_identical(t in text(), count in 0usize..100) {
        let dir = tempfile::tempdir().unwrap();
        let store = SummaryStore::new(dir.path());
        let doc = SummaryDocument::from(&DailyNewsSummary {
            ticker: "MSFT".into(),
            date: day(3),
            text: t,
            source_article_count: count,
            opinion_article_count: 0,
        });
        let path = store.persist(&doc).unwrap();
        let bytes = std::fs::read(path).unwrap();
        prop_assert_eq!(&store.load_bytes(&doc.key()).unwrap(), &bytes);
        prop_assert_eq!(io::to_json_bytes(&store.load(&doc.key()).unwrap()).unwrap(), bytes);
    }
}

#[test]
fn progressive_chain_links_every_month_back_to_the_root() {
    let dir = tempfile::tempdir().unwrap();
    let store = SummaryStore::new(dir.path());
    let client = SyntheticAnalyst::default();
    let mut prev = None;
    for m in 0..6 {
        let as_of = month(m);
        // Every third month is quiet and carries the previous text forward.
        let dailies: Vec<DailyNewsSummary> = if m % 3 == 2 {
            Vec::new()
        } else {
            (0..3)
                .map(|k| DailyNewsSummary {
                    ticker: "AAPL".into(),
                    date: as_of - Duration::days(3 * k),
                    text: format!("Factual news: item {m}-{k}"),
                    source_article_count: 1,
                    opinion_article_count: 0,
                })
                .collect()
        };
        let s = update_progressive_summary(prev.as_ref(), &dailies, as_of, 28, &client).unwrap();
        store.persist(&(&s).into()).unwrap();
        prev = Some(s);
    }
    let last = SummaryKey::new(SummaryKind::ProgressiveNews, Some("AAPL"), month(5));
    let chain = store.chain(&last).unwrap();
    assert_eq!(chain.len(), 6);
    assert_eq!(chain.last().unwrap().lineage.predecessor, None);
    assert!(chain.windows(2).all(|w| w[0].lineage.predecessor.as_ref() == Some(&w[1].key())));
    assert_eq!(chain[3].text, chain[4].text, "quiet month keeps its predecessor's text");
    assert_eq!(store.enumerate(SummaryKind::ProgressiveNews).unwrap().len(), 6);
}
