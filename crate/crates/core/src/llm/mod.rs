//! Completion-model interface used by every summarizer and the signal engine.
//!
//! A client maps `(system role, user prompt, decoding parameters)` to text.
//! Production adapters talk to a hosted model; the stubs in [`stub`] are pure
//! functions of the request, which makes the whole pipeline reproducible.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[cfg(feature = "openai")]
pub mod openai;
pub mod stub;

pub use stub::{StubLlm, SyntheticAnalyst};

/// Which pipeline stage issued a request. Adapters may ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    DailyNews,
    ProgressiveNews,
    Fundamentals,
    PriceDynamics,
    MacroReport,
    MacroSynthesis,
    Signal,
    Ranking,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    pub max_tokens: Option<u32>,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self { temperature: 0.0, max_tokens: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub task: Task,
    pub system: String,
    pub prompt: String,
    pub params: DecodingParams,
}

impl CompletionRequest {
    pub fn new(task: Task, system: impl Into<String>, prompt: impl Into<String>) -> Self {
        Self { task, system: system.into(), prompt: prompt.into(), params: DecodingParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    /// Rate limits, timeouts and server errors: worth retrying.
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("{0}")]
    Fatal(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl RetryPolicy {
    /// Same retry budget without sleeping, for in-process clients.
    pub fn immediate() -> Self {
        Self { base_delay: Duration::ZERO, ..Self::default() }
    }
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 3, base_delay: Duration::from_millis(500) }
    }
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError>;

    /// Prompt budget in (estimated) tokens.
    fn context_limit_tokens(&self) -> usize {
        8_192
    }

    fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy::default()
    }
}

impl<C: LlmClient + ?Sized> LlmClient for &C {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
    fn context_limit_tokens(&self) -> usize {
        (**self).context_limit_tokens()
    }
    fn retry_policy(&self) -> RetryPolicy {
        (**self).retry_policy()
    }
}

impl<C: LlmClient + ?Sized> LlmClient for Box<C> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
    fn context_limit_tokens(&self) -> usize {
        (**self).context_limit_tokens()
    }
    fn retry_policy(&self) -> RetryPolicy {
        (**self).retry_policy()
    }
}

impl<C: LlmClient + ?Sized> LlmClient for Arc<C> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
    fn context_limit_tokens(&self) -> usize {
        (**self).context_limit_tokens()
    }
    fn retry_policy(&self) -> RetryPolicy {
        (**self).retry_policy()
    }
}

/// Rough token count: four characters per token.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

/// Issues a request with the client's retry policy and exponential backoff.
pub fn call(client: &dyn LlmClient, request: &CompletionRequest) -> Result<String> {
    let policy = client.retry_policy();
    let mut attempt = 0;
    loop {
        attempt += 1;
        match client.complete(request) {
            Ok(text) => return Ok(text),
            Err(LlmError::Transient(msg)) if attempt <= policy.max_retries => {
                let delay = policy.base_delay * 2u32.saturating_pow(attempt - 1);
                log::warn!("{:?} request failed (attempt {attempt}): {msg}; retrying in {delay:?}", request.task);
                std::thread::sleep(delay);
            }
            Err(e) => {
                return Err(Error::Transport { attempts: attempt, message: e.to_string() });
            }
        }
    }
}

/// Caps the number of requests in flight against the wrapped client.
pub struct Bounded<C> {
    inner: C,
    limit: usize,
    in_flight: Mutex<usize>,
    released: Condvar,
}

impl<C: LlmClient> Bounded<C> {
    pub fn new(inner: C, limit: usize) -> Self {
        Self { inner, limit: limit.max(1), in_flight: Mutex::new(0), released: Condvar::new() }
    }
}

impl<C: LlmClient> LlmClient for Bounded<C> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        {
            let mut n = self.in_flight.lock().expect("limiter poisoned");
            while *n >= self.limit {
                n = self.released.wait(n).expect("limiter poisoned");
            }
            *n += 1;
        }
        let out = self.inner.complete(request);
        *self.in_flight.lock().expect("limiter poisoned") -= 1;
        self.released.notify_one();
        out
    }

    fn context_limit_tokens(&self) -> usize {
        self.inner.context_limit_tokens()
    }

    fn retry_policy(&self) -> RetryPolicy {
        self.inner.retry_policy()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn retries_transient_failures_then_succeeds() {
        let failures = AtomicUsize::new(2);
        let client = StubLlm::from_fn(move |_| {
            if failures.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1)).is_ok() {
                Err(LlmError::Transient("429".into()))
            } else {
                Ok("ok".into())
            }
        });
        let req = CompletionRequest::new(Task::DailyNews, "s", "p");
        assert_eq!(call(&client, &req).unwrap(), "ok");
        assert_eq!(client.calls(), 3);
    }

    #[test]
    fn gives_up_after_three_retries() {
        let client = StubLlm::from_fn(|_| Err(LlmError::Transient("timeout".into())));
        let req = CompletionRequest::new(Task::DailyNews, "s", "p");
        match call(&client, &req) {
            Err(Error::Transport { attempts, .. }) => assert_eq!(attempts, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fatal_errors_are_not_retried() {
        let client = StubLlm::from_fn(|_| Err(LlmError::Fatal("bad key".into())));
        let req = CompletionRequest::new(Task::Signal, "s", "p");
        assert!(matches!(call(&client, &req), Err(Error::Transport { attempts: 1, .. })));
    }

    #[test]
    fn bounded_client_limits_concurrency() {
        use rayon::prelude::*;
        let current = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let (c, p) = (current.clone(), peak.clone());
        let inner = StubLlm::from_fn(move |_| {
            let now = c.fetch_add(1, Ordering::SeqCst) + 1;
            p.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(2));
            c.fetch_sub(1, Ordering::SeqCst);
            Ok(String::new())
        });
        let bounded = Bounded::new(inner, 2);
        let req = CompletionRequest::new(Task::Signal, "s", "p");
        (0..32).into_par_iter().for_each(|_| {
            bounded.complete(&req).unwrap();
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
