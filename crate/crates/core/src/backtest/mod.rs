//! Monthly-rebalanced strategy backtests.

pub mod engine;
pub mod report;
pub mod strategy;
pub mod weights;

pub use engine::{run_backtest, run_strategies, PerformanceReport, TradeRecord, WealthPoint};
pub use strategy::{catalog, parse_strategy_list, Rule, StrategyDoc, StrategySpec, Weighting};
pub use weights::{
    build_weights, moving_average_filter, score_table, top_n_by_trailing_sharpe, CapTable, ScoreTable, StrategyInputs,
    WeightSchedule,
};
