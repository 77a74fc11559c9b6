//! Renders a [`MetricsReport`] into a prompt and asks for a short comparative report.

use crate::error::{Error, Result};
use crate::llm::{self, CompletionRequest, LlmClient, Task};
use crate::metrics::MetricsReport;

const SYSTEM: &str = "You are a financial analyst who compares a stock's recent price behaviour with its peers and the market.";

pub fn format_percent(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

pub fn format_ratio(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

/// Checks that every window has a row for each entity of the report.
fn validate(report: &MetricsReport, ticker: &str) -> Result<()> {
    if report.target != ticker {
        return Err(Error::InvalidInput(format!("report is for {}, not {ticker}", report.target)));
    }
    if report.windows.is_empty() {
        return Err(Error::InvalidInput("report has no windows".into()));
    }
    for w in &report.windows {
        for entity in report.entities() {
            if report.row(w.months, entity).is_none() {
                let role = if entity == report.index { "index" } else { "entity" };
                return Err(Error::InvalidInput(format!("{}-month window has no {role} row for {entity}", w.months)));
            }
        }
    }
    Ok(())
}

pub fn dynamics_prompt(report: &MetricsReport) -> String {
    let mut p = format!(
        "Target: {}\nPeers (most similar first): {}\nMarket index: {}\nAs of: {}\n\n### Performance Metrics\n",
        report.target,
        report.peers.join(", "),
        report.index,
        report.as_of
    );
    let entities = report.entities();
    for w in &report.windows {
        p.push_str(&format!(
            "#### {}-month window ({} to {})\n| Ticker | Cumulative Return | Volatility | Sharpe Ratio | Sortino Ratio | Max Drawdown |\n|---|---|---|---|---|---|\n",
            w.months, w.start, w.end
        ));
        for e in &entities {
            let r = report.row(w.months, e).expect("validated");
            p.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} |\n",
                r.ticker,
                format_percent(r.cumulative_return),
                format_percent(r.volatility),
                format_ratio(r.sharpe),
                format_ratio(r.sortino),
                format_percent(r.max_drawdown)
            ));
        }
    }
    p.push_str(&format!(
        "#### Correlation of daily returns ({}-month window)\n| | {} |\n|---|{}\n",
        report.correlation_window_months,
        report.correlation.tickers.join(" | "),
        "---|".repeat(report.correlation.tickers.len())
    ));
    for (i, t) in report.correlation.tickers.iter().enumerate() {
        let cells: Vec<String> = report.correlation.values[i].iter().map(|v| format_ratio(*v)).collect();
        p.push_str(&format!("| {t} | {} |\n", cells.join(" | ")));
    }
    p.push_str(&format!(
        "\n{}\nCompare {} with its peers and the market index on each metric and window. Note where it leads \
         or lags, how its risk-adjusted returns compare, and how closely it moves with the others. Condense \
         the analysis into a concise, factual report.\n",
        llm::stub::INSTRUCTIONS_HEADING,
        report.target
    ));
    p
}

/// Price-dynamics summary for `ticker`, which must be the report's target.
pub fn render_dynamics_summary(report: &MetricsReport, ticker: &str, client: &dyn LlmClient) -> Result<String> {
    validate(report, ticker)?;
    let request = CompletionRequest::new(Task::PriceDynamics, SYSTEM, dynamics_prompt(report));
    Ok(llm::call(client, &request)?.trim().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::StubLlm;
    use crate::metrics::{CorrelationMatrix, TickerMetrics, WindowMetrics};
    use chrono::NaiveDate;

    fn row(t: &str, cr: f64) -> TickerMetrics {
        TickerMetrics {
            ticker: t.into(),
            cumulative_return: cr,
            volatility: 0.217,
            sharpe: Some(1.3412),
            sortino: None,
            max_drawdown: -0.16,
        }
    }

    fn report(tickers: &[&str]) -> MetricsReport {
        let d = NaiveDate::from_ymd_opt(2023, 11, 30).unwrap();
        let n = tickers.len();
        MetricsReport {
            as_of: d,
            target: tickers[0].into(),
            peers: tickers[1..n - 1].iter().map(|s| s.to_string()).collect(),
            index: tickers[n - 1].into(),
            windows: vec![WindowMetrics { months: 3, start: d, end: d, rows: tickers.iter().map(|t| row(t, 0.29)).collect() }],
            correlation_window_months: 3,
            correlation: CorrelationMatrix {
                tickers: tickers.iter().map(|s| s.to_string()).collect(),
                values: vec![vec![Some(1.0); n]; n],
            },
        }
    }

    #[test]
    fn prompt_embeds_metric_strings() {
        let stub = StubLlm::concatenating();
        let r = report(&["AAPL", "MSFT", "SPY"]);
        let out = render_dynamics_summary(&r, "AAPL", &stub).unwrap();
        for s in ["29.00%", "21.70%", "1.34", "-16.00%", "n/a"] {
            assert!(out.contains(s), "missing {s}");
        }
    }

    #[test]
    fn seven_entities_are_listed() {
        let r = report(&["AAPL", "ADBE", "AMZN", "GOOGL", "META", "MSFT", "SPY"]);
        let p = dynamics_prompt(&r);
        assert_eq!(p.lines().filter(|l| l.starts_with("| ") && l.contains("29.00%")).count(), 7);
    }

    #[test]
    fn missing_index_row_is_invalid() {
        let mut r = report(&["AAPL", "MSFT", "SPY"]);
        r.windows[0].rows.pop();
        let stub = StubLlm::fixed("x");
        assert!(matches!(render_dynamics_summary(&r, "AAPL", &stub), Err(Error::InvalidInput(_))));
        assert_eq!(stub.calls(), 0);
    }
}
