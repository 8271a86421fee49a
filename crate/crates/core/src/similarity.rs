//! Similarity primitives: embedding providers, cosine similarity and keyword
//! overlap.
//!
//! The offline [`HashedNgramEmbedder`] hashes character 1- to 3-grams taken
//! inside space-padded words into a fixed number of signed buckets. Weights
//! grow with n (0.25, 0.5, 1.0) and term counts are log-damped, so shared
//! letters between unrelated texts contribute little compared with shared
//! word fragments.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize::words;
use crate::gate::InFlightGate;

pub const DEFAULT_DIMENSION: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    /// The remote service could not be reached or answered with an error.
    /// Callers may retry.
    #[error("embedding transport error: {0}")]
    Transport(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed embedding response: {0}")]
    Malformed(String),
}

impl EmbedError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, EmbedError::Transport(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("vector dimensions differ: {0} vs {1}")]
pub struct DimensionMismatch(pub usize, pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Rejects non-finite components.
    pub fn new(values: Vec<f64>) -> Option<Self> {
        values.iter().all(|v| v.is_finite()).then_some(EmbeddingVector(values))
    }

    pub fn zeros(dimension: usize) -> Self {
        EmbeddingVector(vec![0.0; dimension])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Unit-length copy; the zero vector stays zero.
    pub fn normalized(mut self) -> Self {
        let norm = self.norm();
        if norm > 0.0 {
            self.0.iter_mut().for_each(|v| *v /= norm);
        }
        self
    }

    pub fn scaled(&self, k: f64) -> Self {
        EmbeddingVector(self.0.iter().map(|v| v * k).collect())
    }
}

/// Standard cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, DimensionMismatch> {
    if a.dimension() != b.dimension() {
        return Err(DimensionMismatch(a.dimension(), b.dimension()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Share of the candidate fragment's tokens `a` that also occur in `b`.
pub fn keyword_overlap<S: AsRef<str> + Ord>(a: &BTreeSet<S>, b: &BTreeSet<S>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let shared = a.iter().filter(|t| b.contains(*t)).count();
    shared as f64 / a.len() as f64
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for std::sync::Arc<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        (**self).embed(text)
    }
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        (**self).embed_batch(texts)
    }
}

/// Cosine between the embeddings of two texts.
pub fn text_similarity(provider: &dyn EmbeddingProvider, a: &str, b: &str) -> Result<f64, EmbedError> {
    let (va, vb) = (provider.embed(a)?, provider.embed(b)?);
    cosine(&va, &vb).map_err(|DimensionMismatch(e, g)| EmbedError::DimensionMismatch { expected: e, got: g })
}

/// Deterministic offline embedder over hashed character n-grams.
#[derive(Debug, Clone)]
pub struct HashedNgramEmbedder {
    dimension: usize,
}

impl Default for HashedNgramEmbedder {
    fn default() -> Self {
        HashedNgramEmbedder { dimension: DEFAULT_DIMENSION }
    }
}

impl HashedNgramEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashedNgramEmbedder { dimension }
    }

    fn weight(n: usize) -> f64 {
        match n {
            1 => 0.25,
            2 => 0.5,
            _ => 1.0,
        }
    }
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl EmbeddingProvider for HashedNgramEmbedder {
    fn name(&self) -> &str {
        "hashed-ngram"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut counts: HashMap<(usize, String), u32> = HashMap::new();
        for word in words(text) {
            let padded: Vec<char> = std::iter::once(' ').chain(word.text.chars()).chain(std::iter::once(' ')).collect();
            for n in 1..=3 {
                for gram in padded.windows(n) {
                    if gram.iter().all(|c| *c == ' ') {
                        continue;
                    }
                    *counts.entry((n, gram.iter().collect())).or_default() += 1;
                }
            }
        }
        let mut values = vec![0.0; self.dimension];
        for ((n, gram), count) in counts {
            let hash = fnv1a(n.to_string().bytes().chain(gram.bytes()));
            let sign = if (hash >> 32) & 1 == 1 { -1.0 } else { 1.0 };
            let bucket = (hash % self.dimension as u64) as usize;
            values[bucket] += sign * Self::weight(n) * (1.0 + f64::from(count).ln());
        }
        Ok(EmbeddingVector(values).normalized())
    }
}

/// Memoizes another provider. Keyword embeddings are requested once per
/// sentence by the semantic matcher, so caching saves most calls.
pub struct CachedEmbedder<P> {
    inner: P,
    cache: Mutex<HashMap<String, EmbeddingVector>>,
}

impl<P: EmbeddingProvider> CachedEmbedder<P> {
    pub fn new(inner: P) -> Self {
        CachedEmbedder { inner, cache: Mutex::new(HashMap::new()) }
    }

    pub fn cached_len(&self) -> usize {
        self.cache.lock().expect("embedding cache poisoned").len()
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedEmbedder<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if let Some(v) = self.cache.lock().expect("embedding cache poisoned").get(text) {
            return Ok(v.clone());
        }
        let v = self.inner.embed(text)?;
        self.cache.lock().expect("embedding cache poisoned").insert(text.to_string(), v.clone());
        Ok(v)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for a sentence-embedding service speaking
/// `POST /embed {"texts": [...]}` → `{"vectors": [[...]]}`.
pub struct HttpEmbeddingProvider {
    url: String,
    dimension: usize,
    token: Option<String>,
    client: reqwest::blocking::Client,
    gate: InFlightGate,
}

impl HttpEmbeddingProvider {
    pub fn new(
        endpoint: &str,
        dimension: usize,
        token: Option<String>,
        max_in_flight: usize,
        timeout: Duration,
    ) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let url = format!("{}/embed", endpoint.trim_end_matches('/'));
        Ok(HttpEmbeddingProvider { url, dimension, token, client, gate: InFlightGate::new(max_in_flight) })
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed_batch(&[text])?;
        out.pop().ok_or_else(|| EmbedError::Malformed("empty vector list".into()))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let _permit = self.gate.acquire();
        let mut request = self.client.post(&self.url).json(&EmbedRequest { texts });
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request.send().map_err(|e| EmbedError::Transport(e.to_string()))?;
        if !response.status().is_success() {
            return Err(EmbedError::Transport(format!("status {}", response.status())));
        }
        let body: EmbedResponse = response.json().map_err(|e| EmbedError::Malformed(e.to_string()))?;
        if body.vectors.len() != texts.len() {
            return Err(EmbedError::Malformed(format!("{} vectors for {} texts", body.vectors.len(), texts.len())));
        }
        body.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dimension {
                    return Err(EmbedError::DimensionMismatch { expected: self.dimension, got: v.len() });
                }
                EmbeddingVector::new(v)
                    .map(EmbeddingVector::normalized)
                    .ok_or_else(|| EmbedError::Malformed("non-finite component".into()))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn cosine_identity_and_opposite() {
        let a = v(&[0.3, -1.2, 4.0]);
        assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine(&a, &a.scaled(-1.0)).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_zero_norm_and_mismatch() {
        assert_eq!(cosine(&EmbeddingVector::zeros(3), &v(&[1.0, 0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(cosine(&v(&[1.0]), &v(&[1.0, 2.0])), Err(DimensionMismatch(1, 2)));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(EmbeddingVector::new(vec![1.0, f64::NAN]).is_none());
    }

    #[test]
    fn overlap_examples() {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<String>>();
        let a = set(&["court", "confirmed", "case"]);
        assert_eq!(keyword_overlap(&a, &a), 1.0);
        assert_eq!(keyword_overlap(&a, &set(&["x"])), 0.0);
        assert!((keyword_overlap(&a, &set(&["court", "case", "ruling", "final"])) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(keyword_overlap(&set(&[]), &a), 0.0);
    }

    #[test]
    fn fallback_is_deterministic_and_unit() {
        let e = HashedNgramEmbedder::default();
        let a = e.embed("x").unwrap();
        assert_eq!(a, e.embed("x").unwrap());
        assert_eq!(a.dimension(), DEFAULT_DIMENSION);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fallback_empty_is_zero() {
        let e = HashedNgramEmbedder::default();
        let z = e.embed("").unwrap();
        assert_eq!(z.norm(), 0.0);
        assert_eq!(cosine(&z, &e.embed("anything").unwrap()).unwrap(), 0.0);
        assert_eq!(e.embed(" ,. ").unwrap().norm(), 0.0);
    }

    #[test]
    fn fallback_plural_similarity() {
        let e = HashedNgramEmbedder::default();
        let sim = text_similarity(&e, "traffic jam", "traffic jams").unwrap();
        assert!(sim >= 0.5, "{sim}");
    }

    #[test]
    fn cache_returns_same_vectors() {
        let cached = CachedEmbedder::new(HashedNgramEmbedder::default());
        let a = cached.embed("hello").unwrap();
        let b = cached.embed("hello").unwrap();
        assert_eq!(a, b);
        assert_eq!(cached.cached_len(), 1);
        assert_eq!(a, HashedNgramEmbedder::default().embed("hello").unwrap());
    }
}
