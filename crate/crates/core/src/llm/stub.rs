//! Deterministic in-process clients.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use regex::Regex;
use sha2::{Digest, Sha256};

use super::{CompletionRequest, LlmClient, LlmError, RetryPolicy, Task};

/// Every prompt built by this crate ends with a section under this heading.
pub const INSTRUCTIONS_HEADING: &str = "### Instructions";

type Responder = dyn Fn(&CompletionRequest) -> Result<String, LlmError> + Send + Sync;

/// Closure-backed client that records every request it receives.
pub struct StubLlm {
    respond: Box<Responder>,
    calls: AtomicUsize,
    requests: Mutex<Vec<CompletionRequest>>,
    context_limit: usize,
}

impl StubLlm {
    pub fn from_fn(f: impl Fn(&CompletionRequest) -> Result<String, LlmError> + Send + Sync + 'static) -> Self {
        Self {
            respond: Box::new(f),
            calls: AtomicUsize::new(0),
            requests: Mutex::new(Vec::new()),
            context_limit: 8_192,
        }
    }

    /// Returns the first `chars` characters of the user prompt.
    pub fn echo(chars: usize) -> Self {
        Self::from_fn(move |req| Ok(req.prompt.chars().take(chars).collect()))
    }

    pub fn fixed(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::from_fn(move |_| Ok(text.clone()))
    }

    /// Wraps the whole prompt in start/end markers.
    pub fn concatenating() -> Self {
        Self::from_fn(|req| Ok(format!("<<{:?}>>{}<</{:?}>>", req.task, req.prompt, req.task)))
    }

    pub fn with_context_limit(mut self, tokens: usize) -> Self {
        self.context_limit = tokens;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.requests.lock().expect("stub log poisoned").clone()
    }
}

impl LlmClient for StubLlm {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.requests.lock().expect("stub log poisoned").push(request.clone());
        (self.respond)(request)
    }

    fn context_limit_tokens(&self) -> usize {
        self.context_limit
    }

    fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy::immediate()
    }
}

/// Offline stand-in for a hosted model that produces plausible, fully
/// deterministic outputs for every pipeline task.
///
/// Summaries are the leading words of the prompt's material; signals carry
/// one clause per analysis section and a hash-derived decision (about 23%
/// buy, 1% sell); rankings assign hash-derived scores to each identifier.
#[derive(Debug, Clone)]
pub struct SyntheticAnalyst {
    summary_words: usize,
    id_line: Regex,
}

impl Default for SyntheticAnalyst {
    fn default() -> Self {
        Self {
            summary_words: 60,
            id_line: Regex::new(r"(?m)^\[(S\d+)\]").expect("static regex"),
        }
    }
}

fn digest(parts: &[&str]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().into()
}

/// Prompt material: everything before the instructions, without headings.
fn material(prompt: &str) -> String {
    let body = prompt.split(INSTRUCTIONS_HEADING).next().unwrap_or(prompt);
    body.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
        .collect::<Vec<_>>()
        .join(" ")
}

fn leading_words(text: &str, n: usize) -> String {
    text.split_whitespace().take(n).collect::<Vec<_>>().join(" ")
}

/// Text of the `### <name>` section, up to the next heading.
fn section<'a>(prompt: &'a str, name: &str) -> Option<&'a str> {
    let heading = format!("### {name}");
    let start = prompt.find(&heading)? + heading.len();
    let rest = &prompt[start..];
    let end = rest.find("\n###").unwrap_or(rest.len());
    Some(rest[..end].trim())
}

impl SyntheticAnalyst {
    fn summarize(&self, req: &CompletionRequest) -> String {
        let words = leading_words(&material(&req.prompt), self.summary_words);
        let label = match req.task {
            Task::DailyNews => "Daily news",
            Task::ProgressiveNews => "News summary",
            Task::Fundamentals => "Fundamentals",
            Task::PriceDynamics => "Price dynamics",
            Task::MacroReport => "Report summary",
            Task::MacroSynthesis => "Macro outlook",
            Task::Signal | Task::Ranking => unreachable!("not a summarization task"),
        };
        if words.is_empty() {
            format!("{label}: no material.")
        } else {
            format!("{label}: {words}")
        }
    }

    fn signal(&self, req: &CompletionRequest) -> String {
        let mut out = String::new();
        for (name, lead) in [
            ("News Analysis", "The news flow shows"),
            ("Price Dynamics Analysis", "Relative price action shows"),
            ("Macroeconomic Environment Analysis", "The macro backdrop shows"),
            ("Fundamentals Analysis", "Fundamentals show"),
        ] {
            if let Some(text) = section(&req.prompt, name) {
                let _ = write!(out, "{lead} {}. ", leading_words(text, 12));
            }
        }
        let h = digest(&[&req.prompt]);
        let decision = match h[0] {
            0..=58 => "BUY",
            59..=60 => "SELL",
            _ => "HOLD",
        };
        let _ = write!(out, "\nDecision: {decision}");
        out
    }

    fn rank(&self, req: &CompletionRequest) -> String {
        let mut out = String::new();
        for line in req.prompt.lines() {
            if let Some(cap) = self.id_line.captures(line) {
                let h = digest(&[&cap[1], line]);
                let _ = writeln!(out, "{}: {}", &cap[1], h[0] % 11);
            }
        }
        out
    }
}

impl LlmClient for SyntheticAnalyst {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        Ok(match req.task {
            Task::Signal => self.signal(req),
            Task::Ranking => self.rank(req),
            _ => self.summarize(req),
        })
    }

    fn context_limit_tokens(&self) -> usize {
        32_000
    }

    fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy::immediate()
    }
}
