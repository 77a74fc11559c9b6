//! Daily simulation of a monthly-rebalanced schedule with turnover costs.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::strategy::StrategySpec;
use super::weights::{build_weights, StrategyInputs, WeightSchedule};
use crate::calendar;
use crate::error::{Error, Result};
use crate::evaluation::SignalMatrix;
use crate::metrics::{max_drawdown, risk_metrics, RiskParams};
use crate::panel::PricePanel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WealthPoint {
    pub date: NaiveDate,
    pub gross: f64,
    pub net: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub date: NaiveDate,
    pub ticker: String,
    /// Target weight minus the drifted weight before rebalancing.
    pub weight_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub strategy: String,
    pub cost_bps: f64,
    pub total_return_gross: f64,
    pub total_return_net: f64,
    pub sharpe: Option<f64>,
    pub sortino: Option<f64>,
    pub volatility: f64,
    /// Share of closed positions with positive net P&L; undefined without trades.
    pub win_rate: Option<f64>,
    pub max_drawdown: f64,
    pub trades: usize,
    /// Sum of absolute weight changes over all rebalances.
    pub turnover: f64,
    pub wealth_curve: Vec<WealthPoint>,
    pub trade_log: Vec<TradeRecord>,
}

struct Position {
    sign: f64,
    pnl: f64,
}

struct Simulation {
    dates: Vec<NaiveDate>,
    wealth: Vec<f64>,
    trade_log: Vec<TradeRecord>,
    closed: Vec<f64>,
    turnover: f64,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Rebalance day indices, dropping trailing months with no later prices.
fn rebalance_days(schedule: &WeightSchedule, panel: &PricePanel) -> Result<(Vec<usize>, usize)> {
    let mut days = Vec::with_capacity(schedule.months.len());
    for &m in &schedule.months {
        let d = panel
            .index_on_or_before(m)
            .ok_or_else(|| Error::Alignment(format!("no prices on or before rebalance month {m}")))?;
        if let Some(&prev) = days.last() {
            if d <= prev {
                return Err(Error::Alignment(format!("rebalance month {m} falls on the same trading day as the previous one")));
            }
        }
        days.push(d);
    }
    let Some(&last_month) = schedule.months.last() else {
        return Ok((days, 0));
    };
    let end = panel.index_on_or_before(calendar::next_month_end(last_month)).expect("after the last rebalance day");
    while days.last().is_some_and(|&d| d >= end) {
        log::warn!("no prices after rebalance on {}; month skipped", panel.calendar()[days[days.len() - 1]]);
        days.pop();
    }
    Ok((days, end))
}

fn simulate(schedule: &WeightSchedule, panel: &PricePanel, cost_bps: f64) -> Result<Simulation> {
    let cols = schedule.tickers.iter().map(|t| panel.require_ticker(t)).collect::<Result<Vec<_>>>()?;
    let (days, end) = rebalance_days(schedule, panel)?;
    let mut sim = Simulation { dates: Vec::new(), wealth: Vec::new(), trade_log: Vec::new(), closed: Vec::new(), turnover: 0.0 };
    let Some(&start) = days.first() else {
        return Ok(sim);
    };
    let c = cost_bps / 10_000.0;
    let n = cols.len();
    let mut cash = 1.0;
    let mut values = vec![0.0; n];
    let mut last_price: Vec<Option<f64>> = vec![None; n];
    let mut open: Vec<Option<Position>> = (0..n).map(|_| None).collect();
    let mut flagged = vec![false; n];
    let mut next = 0;

    for t in start..=end {
        let date = panel.calendar()[t];
        for (i, &col) in cols.iter().enumerate() {
            let price = panel.price(t, col);
            if t > start && values[i] != 0.0 {
                let r = match (price, last_price[i]) {
                    (Some(p), Some(q)) => p / q - 1.0,
                    _ => {
                        if !flagged[i] {
                            log::warn!("{}: no price on {date}, position held at last close", schedule.tickers[i]);
                            flagged[i] = true;
                        }
                        0.0
                    }
                };
                let pnl = values[i] * r;
                values[i] += pnl;
                if let Some(pos) = open[i].as_mut() {
                    pos.pnl += pnl;
                }
            }
            if price.is_some() {
                last_price[i] = price;
            }
        }
        let mut wealth = cash + values.iter().sum::<f64>();
        sim.dates.push(date);
        sim.wealth.push(wealth);

        if next < days.len() && days[next] == t {
            if !(wealth > 0.0) {
                return Err(Error::InvalidInput(format!("portfolio wealth is {wealth} on {date}, cannot rebalance")));
            }
            let target = &schedule.weights[next];
            let mut turnover = 0.0;
            for i in 0..n {
                let drifted = values[i] / wealth;
                let delta = target[i] - drifted;
                turnover += delta.abs();
                if delta.abs() > 1e-12 {
                    sim.trade_log.push(TradeRecord { date, ticker: schedule.tickers[i].clone(), weight_delta: delta });
                }
                if target[i] != 0.0 && last_price[i].is_none() {
                    return Err(Error::MissingData { ticker: schedule.tickers[i].clone(), date });
                }
                let (old, new) = (sign(drifted), sign(target[i]));
                if old != 0.0 && new != old {
                    let mut pos = open[i].take().expect("open position for a held name");
                    pos.pnl -= c * drifted.abs() * wealth;
                    sim.closed.push(pos.pnl);
                }
                if new != 0.0 {
                    if new == old {
                        if let Some(pos) = open[i].as_mut() {
                            pos.pnl -= c * delta.abs() * wealth;
                        }
                    } else {
                        open[i] = Some(Position { sign: new, pnl: -c * target[i].abs() * wealth });
                    }
                }
            }
            let cost = c * turnover * wealth;
            wealth -= cost;
            for i in 0..n {
                values[i] = target[i] * wealth;
            }
            cash = wealth - values.iter().sum::<f64>();
            sim.turnover += turnover;
            flagged.iter_mut().for_each(|f| *f = false);
            next += 1;
        }
    }
    for pos in open.into_iter().flatten() {
        debug_assert!(pos.sign != 0.0);
        sim.closed.push(pos.pnl);
    }
    Ok(sim)
}

/// Runs `schedule` over `panel`, reporting gross and net-of-cost results.
///
/// Weights are set at the close of each rebalance day and then drift with
/// prices. Each rebalance costs `cost_bps` per unit of turnover, taken from
/// wealth at that close. Risk metrics use the net daily series.
pub fn run_backtest(spec: &StrategySpec, schedule: &WeightSchedule, panel: &PricePanel, params: RiskParams) -> Result<PerformanceReport> {
    let gross = simulate(schedule, panel, 0.0)?;
    let net = simulate(schedule, panel, spec.cost_bps)?;
    let total = |w: &[f64]| w.last().map_or(0.0, |last| last / w[0] - 1.0);
    let returns: Vec<f64> = net.wealth.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    let (volatility, sharpe, sortino) = if returns.len() >= 2 {
        let m = risk_metrics(&returns, params)?;
        (m.volatility, m.sharpe, m.sortino)
    } else {
        (0.0, None, None)
    };
    let max_dd = if net.wealth.is_empty() { 0.0 } else { max_drawdown(&net.wealth)? };
    let wins = net.closed.iter().filter(|p| **p > 0.0).count();
    Ok(PerformanceReport {
        strategy: spec.name(),
        cost_bps: spec.cost_bps,
        total_return_gross: total(&gross.wealth),
        total_return_net: total(&net.wealth),
        sharpe,
        sortino,
        volatility,
        win_rate: (!net.closed.is_empty()).then(|| wins as f64 / net.closed.len() as f64),
        max_drawdown: max_dd,
        trades: net.closed.len(),
        turnover: net.turnover,
        wealth_curve: net
            .dates
            .iter()
            .zip(gross.wealth.iter().zip(&net.wealth))
            .map(|(&date, (&g, &n))| WealthPoint { date, gross: g, net: n })
            .collect(),
        trade_log: net.trade_log,
    })
}

/// Builds weights and runs every strategy in parallel, in input order.
pub fn run_strategies(
    specs: &[StrategySpec],
    signals: &SignalMatrix,
    panel: &PricePanel,
    inputs: StrategyInputs,
) -> Vec<Result<PerformanceReport>> {
    specs
        .par_iter()
        .map(|spec| {
            let schedule = build_weights(spec, signals, panel, inputs)?;
            run_backtest(spec, &schedule, panel, inputs.risk)
        })
        .collect()
}
