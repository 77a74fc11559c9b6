//! Summary CSV, wealth-curve CSV and aligned text table for backtest reports.

use std::io::Write;

use super::engine::PerformanceReport;
use crate::error::Result;

pub const SUMMARY_HEADER: [&str; 8] = [
    "strategy",
    "total_return_gross",
    "total_return_net",
    "sharpe",
    "sortino",
    "volatility",
    "win_rate",
    "max_drawdown",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per strategy, values as fractions.
pub fn write_summary_csv<W: Write>(reports: &[PerformanceReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in reports {
        w.write_record([
            r.strategy.clone(),
            r.total_return_gross.to_string(),
            r.total_return_net.to_string(),
            opt(r.sharpe),
            opt(r.sortino),
            r.volatility.to_string(),
            opt(r.win_rate),
            r.max_drawdown.to_string(),
        ])?;
    }
    w.flush().map_err(|e| crate::Error::io("<summary csv>", e))?;
    Ok(())
}

/// Long format: `strategy,date,gross,net`.
pub fn write_wealth_csv<W: Write>(reports: &[PerformanceReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "date", "gross", "net"])?;
    for r in reports {
        for p in &r.wealth_curve {
            w.write_record([r.strategy.clone(), p.date.to_string(), p.gross.to_string(), p.net.to_string()])?;
        }
    }
    w.flush().map_err(|e| crate::Error::io("<wealth csv>", e))?;
    Ok(())
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{:.2}", v * 100.0))
}

fn ratio(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.2}"))
}

/// Human-readable table; net total return in parentheses.
pub fn render_table(reports: &[PerformanceReport]) -> String {
    let header = ["Strategy", "Total Return (%)", "Sharpe", "Sortino", "Vol (%)", "Win Rate (%)", "Max Ddn (%)"];
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|r| {
            [
                r.strategy.clone(),
                format!("{} ({})", pct(Some(r.total_return_gross)), pct(Some(r.total_return_net))),
                ratio(r.sharpe),
                ratio(r.sortino),
                pct(Some(r.volatility)),
                pct(r.win_rate),
                pct(Some(r.max_drawdown)),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for r in &rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}
