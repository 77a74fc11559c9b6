//! Peer selection by embedding similarity of company descriptions.
//!
//! Each description is embedded once, every other stock is scored against
//! the target by cosine similarity, and the `n` closest stocks become the
//! comparison universe for the price dynamics summary.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::panel::check_unique;

/// Peers compared against each target in the price dynamics summary.
pub const DEFAULT_PEER_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StockDescription {
    pub ticker: String,
    #[serde(rename = "description")]
    pub text: String,
    /// Company name, used to recognise relevant news.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl StockDescription {
    pub fn new(ticker: impl Into<String>, text: impl Into<String>) -> Self {
        Self { ticker: ticker.into(), text: text.into(), name: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("embedding must have at least one dimension".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidNumber(*v));
        }
        Ok(Self(values))
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Maps text to a fixed-dimension vector. Identical text must give an identical vector.
pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        (**self).embed(text)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        (**self).embed(text)
    }
}

/// Offline provider: signed feature hashing of lowercase word unigrams,
/// L2-normalized.
#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub const DEFAULT_DIMENSION: usize = 384;

    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        Ok(Self { dimension })
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self { dimension: Self::DEFAULT_DIMENSION }
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let mut values = vec![0.0; self.dimension];
        let mut tokens = 0usize;
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let h = fnv1a(token.to_lowercase().as_bytes());
            let bucket = (h % self.dimension as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            values[bucket] += sign;
            tokens += 1;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if tokens == 0 || norm == 0.0 {
            return Err(Error::EmptyInput("text has no embeddable tokens".into()));
        }
        values.iter_mut().for_each(|v| *v /= norm);
        EmbeddingVector::new(values)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(PRIME);
    }
    // Final avalanche so the sign bit depends on every input byte.
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h
}

/// Memoizes another provider, keyed by the SHA-256 of the text.
pub struct CachedEmbedder<P> {
    inner: P,
    cache: Mutex<HashMap<[u8; 32], EmbeddingVector>>,
}

impl<P: EmbeddingProvider> CachedEmbedder<P> {
    pub fn new(inner: P) -> Self {
        Self { inner, cache: Mutex::new(HashMap::new()) }
    }

    pub fn cached_len(&self) -> usize {
        self.cache.lock().expect("embedding cache poisoned").len()
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedEmbedder<P> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let key: [u8; 32] = Sha256::digest(text.as_bytes()).into();
        if let Some(v) = self.cache.lock().expect("embedding cache poisoned").get(&key) {
            return Ok(v.clone());
        }
        let v = self.inner.embed(text)?;
        self.cache
            .lock()
            .expect("embedding cache poisoned")
            .insert(key, v.clone());
        Ok(v)
    }
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::Shape(format!(
            "embedding dimensions differ: {} vs {}",
            a.dimension(),
            b.dimension()
        )));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    let dot: f64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerScore {
    pub ticker: String,
    pub similarity: f64,
}

/// Orders by descending similarity, then ascending ticker.
fn rank_order(a: &PeerScore, b: &PeerScore) -> std::cmp::Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then_with(|| a.ticker.cmp(&b.ticker))
}

fn embed_all(descriptions: &[StockDescription], provider: &dyn EmbeddingProvider) -> Result<Vec<EmbeddingVector>> {
    descriptions
        .par_iter()
        .map(|d| {
            if d.text.trim().is_empty() {
                return Err(Error::InvalidInput(format!("description of {} is empty", d.ticker)));
            }
            provider.embed(&d.text)
        })
        .collect()
}

fn validate_universe(descriptions: &[StockDescription], n: usize) -> Result<()> {
    let tickers: Vec<String> = descriptions.iter().map(|d| d.ticker.clone()).collect();
    check_unique(&tickers)?;
    if n >= descriptions.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {n} peers from a universe of {}",
            descriptions.len()
        )));
    }
    Ok(())
}

fn rank_against(
    target: usize,
    descriptions: &[StockDescription],
    embeddings: &[EmbeddingVector],
    n: usize,
) -> Result<Vec<PeerScore>> {
    let mut scores = descriptions
        .iter()
        .zip(embeddings)
        .enumerate()
        .filter(|(i, _)| *i != target)
        .map(|(_, (d, e))| {
            Ok(PeerScore {
                ticker: d.ticker.clone(),
                similarity: cosine_similarity(&embeddings[target], e)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(rank_order);
    scores.truncate(n);
    Ok(scores)
}

/// The `n` stocks most similar to `target`, most similar first.
pub fn stock_universe(
    target: &str,
    descriptions: &[StockDescription],
    n: usize,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<PeerScore>> {
    let target_idx = descriptions
        .iter()
        .position(|d| d.ticker == target)
        .ok_or_else(|| Error::NotFound(format!("no description for target {target}")))?;
    validate_universe(descriptions, n)?;
    let embeddings = embed_all(descriptions, provider)?;
    rank_against(target_idx, descriptions, &embeddings, n)
}

/// Persisted peer lists: target ticker to ordered peers with scores.
pub type UniverseCache = BTreeMap<String, Vec<PeerScore>>;

/// Peer lists for every stock in the universe, embedding each description once.
pub fn build_universe_cache(
    descriptions: &[StockDescription],
    n: usize,
    provider: &dyn EmbeddingProvider,
) -> Result<UniverseCache> {
    validate_universe(descriptions, n)?;
    let embeddings = embed_all(descriptions, provider)?;
    (0..descriptions.len())
        .into_par_iter()
        .map(|i| Ok((descriptions[i].ticker.clone(), rank_against(i, descriptions, &embeddings, n)?)))
        .collect()
}
