//! Two-stage macro summary: each report alone, then their union.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llm::{self, CompletionRequest, LlmClient, Task};

const REPORT_SYSTEM: &str = "You are a macro strategist who summarizes investment research.";
const SYNTHESIS_SYSTEM: &str = "You are a macro strategist who synthesizes several research summaries into one outlook.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroReport {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroSummary {
    pub as_of: NaiveDate,
    pub text: String,
    pub report_count: usize,
}

pub fn report_prompt(report: &MacroReport) -> String {
    format!(
        "Report: {}\n\n### Report\n{}\n\n{}\nSummarize this report. Emphasize central bank policy, geopolitical \
         developments and the market outlook by asset class.\n",
        report.name,
        report.text.trim(),
        llm::stub::INSTRUCTIONS_HEADING
    )
}

pub fn synthesis_prompt(as_of: NaiveDate, summaries: &[(String, String)]) -> String {
    let mut p = format!("As of: {as_of}\n\n### Report Summaries\n");
    for (i, (name, text)) in summaries.iter().enumerate() {
        p.push_str(&format!("#### Report {}: {name}\n{}\n", i + 1, text.trim()));
    }
    p.push_str(&format!(
        "\n{}\nAnalyze the summaries together. State the consensus view and where views diverge, point out \
         contradictions, and give the sentiment (positive, negative or neutral) for each asset class or \
         investment dimension. Produce a detailed, factual report.\n",
        llm::stub::INSTRUCTIONS_HEADING
    ));
    p
}

/// One call per report, run in parallel, then one synthesis call.
pub fn summarize_macro(reports: &[MacroReport], as_of: NaiveDate, client: &dyn LlmClient) -> Result<MacroSummary> {
    if reports.is_empty() {
        return Err(Error::EmptyInput(format!("no macro reports for {as_of}")));
    }
    if let Some(r) = reports.iter().find(|r| r.text.trim().is_empty()) {
        return Err(Error::InvalidInput(format!("macro report '{}' is empty", r.name)));
    }
    let summaries = reports
        .par_iter()
        .map(|r| {
            let req = CompletionRequest::new(Task::MacroReport, REPORT_SYSTEM, report_prompt(r));
            llm::call(client, &req).map(|t| (r.name.clone(), t))
        })
        .collect::<Result<Vec<_>>>()?;
    let req = CompletionRequest::new(Task::MacroSynthesis, SYNTHESIS_SYSTEM, synthesis_prompt(as_of, &summaries));
    let text = llm::call(client, &req)?;
    Ok(MacroSummary { as_of, text: text.trim().to_string(), report_count: reports.len() })
}
