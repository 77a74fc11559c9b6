mod common;

use chrono::NaiveDate;
use marketsense_core::calendar::month_end;
use marketsense_core::evaluation::{
    bootstrap_evaluate, detrend_returns, hit_ratio, quantile, random_signal_matrix, signal_performance, Leg,
    MonthlyReturnMatrix, SignalMatrix,
};
use proptest::prelude::*;

fn months(n: usize) -> Vec<NaiveDate> {
    (0..n).map(|i| month_end(NaiveDate::from_ymd_opt(2023, 1 + i as u32, 1).unwrap())).collect()
}

fn tickers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("T{i}")).collect()
}

fn grid<T: std::fmt::Debug>(s: impl Strategy<Value = T>, rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<T>>> {
    prop::collection::vec(prop::collection::vec(s, cols), rows)
}

fn ret() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![9 => (-0.3f64..0.3).prop_map(Some), 1 => Just(None)]
}

fn returns(cells: Vec<Vec<Option<f64>>>) -> MonthlyReturnMatrix {
    MonthlyReturnMatrix::new(months(cells.len()), tickers(cells[0].len()), cells).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn performance_and_hit_ratio_match_enumeration(m in grid(-1i64..=1, 4, 6), r in grid(ret(), 4, 6)) {
        let sig = SignalMatrix::from_values(months(4), tickers(6), &m).unwrap();
        let ret = returns(r.clone());
        for leg in [Leg::Long, Leg::Short, Leg::Both] {
            match common::brute_hit_ratio(&m, &r, leg) {
                Some(hr) => {
                    let perf = signal_performance(&sig, &ret, leg).unwrap();
                    prop_assert!((perf - common::brute_performance(&m, &r, leg)).abs() <= 1e-12);
                    prop_assert!((hit_ratio(&sig, &ret, leg).unwrap() - hr).abs() <= 1e-12);
                }
                None => {
                    prop_assert!(signal_performance(&sig, &ret, leg).is_err());
                    prop_assert!(hit_ratio(&sig, &ret, leg).is_err());
                }
            }
        }
    }

    #[test]
    fn detrended_months_have_zero_mean(r in grid((-0.3f64..0.3).prop_map(Some), 5, 8)) {
        let d = detrend_returns(&returns(r)).unwrap();
        for row in d.rows() {
            let defined: Vec<f64> = row.iter().flatten().copied().collect();
            prop_assert!((defined.iter().sum::<f64>() / defined.len() as f64).abs() <= 1e-12);
        }
        prop_assert_eq!(&detrend_returns(&d).unwrap(), &d);
        // Recomputing on the raw cells only moves them by rounding.
        let again = detrend_returns(&returns(d.rows().to_vec())).unwrap();
        for (a, b) in again.rows().iter().flatten().zip(d.rows().iter().flatten()) {
            prop_assert!((a.unwrap() - b.unwrap()).abs() <= 1e-15);
        }
    }

    #[test]
    fn short_leg_is_long_leg_of_the_mirror_image(m in grid(-1i64..=1, 4, 6), r in grid((-0.3f64..0.3).prop_map(Some), 4, 6)) {
        let neg_m: Vec<Vec<i64>> = m.iter().map(|row| row.iter().map(|v| -v).collect()).collect();
        let neg_r: Vec<Vec<Option<f64>>> = r.iter().map(|row| row.iter().map(|v| v.map(|x| -x)).collect()).collect();
        let sig = SignalMatrix::from_values(months(4), tickers(6), &m).unwrap();
        let mirror = SignalMatrix::from_values(months(4), tickers(6), &neg_m).unwrap();
        if let Ok(short) = signal_performance(&sig, &returns(r), Leg::Short) {
            prop_assert_eq!(short, signal_performance(&mirror, &returns(neg_r), Leg::Long).unwrap());
        }
    }

    #[test]
    fn quantile_is_a_percentage(obs in -1.0f64..1.0, s in prop::collection::vec(-1.0f64..1.0, 1..50)) {
        let q = quantile(obs, &s).unwrap();
        prop_assert!((0.0..=100.0).contains(&q));
    }
}

#[test]
fn detrend_keeps_gaps() {
    let r = returns(vec![vec![Some(0.1), None, Some(0.3)]]);
    let d = detrend_returns(&r).unwrap();
    assert_eq!(d.rows()[0][1], None);
    assert!((d.rows()[0][0].unwrap() + 0.1).abs() < 1e-15);
}

#[test]
fn bootstrap_is_reproducible_bit_for_bit() {
    let ms = months(6);
    let ts = tickers(10);
    let obs = random_signal_matrix(&ms, &ts, 3, 999).unwrap();
    let cells = (0..6).map(|t| (0..10).map(|i| Some(((t * 10 + i) as f64).sin() / 10.0)).collect()).collect();
    let r = MonthlyReturnMatrix::new(ms, ts, cells).unwrap();
    let a = bootstrap_evaluate(&obs, &r, Leg::Both, 500, 42, true).unwrap();
    let b = bootstrap_evaluate(&obs, &r, Leg::Both, 500, 42, true).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    let c = bootstrap_evaluate(&obs, &r, Leg::Both, 500, 43, true).unwrap();
    assert_ne!((a.quantile_r, a.quantile_hr), (c.quantile_r, c.quantile_hr));
}
