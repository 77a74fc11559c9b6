//! OpenAI-compatible chat-completion and embedding adapters.
//!
//! Credentials are read from an environment variable at construction; they
//! never pass through configuration files.

use std::time::Duration;

use serde_json::{json, Value};

use super::{CompletionRequest, LlmClient, LlmError};
use crate::error::{Error, Result};
use crate::similarity::{EmbeddingProvider, EmbeddingVector};

fn api_key(env_var: &str) -> Result<String> {
    std::env::var(env_var)
        .map_err(|_| Error::Configuration(format!("environment variable {env_var} is not set")))
}

fn client(timeout: Duration) -> Result<reqwest::blocking::Client> {
    reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| Error::Configuration(e.to_string()))
}

fn classify(err: reqwest::Error) -> LlmError {
    if err.is_timeout() || err.is_connect() {
        LlmError::Transient(err.to_string())
    } else {
        LlmError::Fatal(err.to_string())
    }
}

fn post(http: &reqwest::blocking::Client, url: &str, key: &str, body: &Value) -> Result<Value, LlmError> {
    let resp = http.post(url).bearer_auth(key).json(body).send().map_err(classify)?;
    let status = resp.status();
    if status.as_u16() == 429 || status.is_server_error() {
        return Err(LlmError::Transient(format!("HTTP {status}")));
    }
    if !status.is_success() {
        let text = resp.text().unwrap_or_default();
        return Err(LlmError::Fatal(format!("HTTP {status}: {text}")));
    }
    resp.json::<Value>().map_err(classify)
}

pub struct OpenAiChat {
    http: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    key: String,
    context_limit: usize,
}

impl OpenAiChat {
    pub fn new(endpoint: &str, model: &str, api_key_env: &str, context_limit: usize) -> Result<Self> {
        Ok(Self {
            http: client(Duration::from_secs(120))?,
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model: model.to_string(),
            key: api_key(api_key_env)?,
            context_limit,
        })
    }
}

impl LlmClient for OpenAiChat {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let mut body = json!({
            "model": self.model,
            "temperature": req.params.temperature,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.prompt},
            ],
        });
        if let Some(max) = req.params.max_tokens {
            body["max_tokens"] = json!(max);
        }
        let url = format!("{}/chat/completions", self.endpoint);
        let value = post(&self.http, &url, &self.key, &body)?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| LlmError::Fatal("response has no message content".into()))
    }

    fn context_limit_tokens(&self) -> usize {
        self.context_limit
    }
}

pub struct OpenAiEmbeddings {
    http: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    key: String,
    dimension: usize,
}

impl OpenAiEmbeddings {
    pub fn new(endpoint: &str, model: &str, api_key_env: &str, dimension: usize) -> Result<Self> {
        Ok(Self {
            http: client(Duration::from_secs(60))?,
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model: model.to_string(),
            key: api_key(api_key_env)?,
            dimension,
        })
    }
}

impl EmbeddingProvider for OpenAiEmbeddings {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let body = json!({"model": self.model, "input": text});
        let url = format!("{}/embeddings", self.endpoint);
        let value = post(&self.http, &url, &self.key, &body)
            .map_err(|e| Error::Transport { attempts: 1, message: e.to_string() })?;
        let values: Vec<f64> = value["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| Error::InvalidInput("embedding response has no vector".into()))?
            .iter()
            .filter_map(Value::as_f64)
            .collect();
        if values.len() != self.dimension {
            return Err(Error::Shape(format!(
                "provider returned {} dimensions, expected {}",
                values.len(),
                self.dimension
            )));
        }
        EmbeddingVector::new(values)
    }
}
