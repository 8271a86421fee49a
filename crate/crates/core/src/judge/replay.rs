//! Transcript replay.
//!
//! A transcript is JSONL, one `{"request_hash": ..., "response_text": ...}`
//! object per line (extra fields such as `kind` are ignored). The hash is
//! SHA-256 over the prompt with whitespace runs collapsed, so transcripts
//! survive reformatting of the prompt templates. When a hash has several
//! entries, successive requests receive them in order and the last one
//! repeats.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::provider::{ChatError, ChatProvider, ChatRequest};

pub fn normalize_prompt(prompt: &str) -> String {
    prompt.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn request_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(normalize_prompt(prompt).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_hash: String,
    pub response_text: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("failed to read transcript {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("transcript line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Default)]
pub struct ReplayProvider {
    entries: HashMap<String, Vec<String>>,
    served: Mutex<HashMap<String, usize>>,
}

impl ReplayProvider {
    pub fn from_entries(entries: impl IntoIterator<Item = TranscriptEntry>) -> Self {
        let mut map: HashMap<String, Vec<String>> = HashMap::new();
        for e in entries {
            map.entry(e.request_hash).or_default().push(e.response_text);
        }
        ReplayProvider { entries: map, served: Mutex::new(HashMap::new()) }
    }

    /// Convenience for tests: pairs of literal prompt and response.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self::from_entries(pairs.into_iter().map(|(p, r)| TranscriptEntry {
            request_hash: request_hash(p),
            response_text: r.to_string(),
        }))
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, TranscriptError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry = serde_json::from_str(line)
                .map_err(|e| TranscriptError::Malformed { line: i + 1, message: e.to_string() })?;
            entries.push(entry);
        }
        Ok(Self::from_entries(entries))
    }

    pub fn load(path: &Path) -> Result<Self, TranscriptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| TranscriptError::Io { path: path.display().to_string(), source })?;
        Self::parse_jsonl(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ChatProvider for ReplayProvider {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        let hash = request_hash(&request.prompt);
        let responses = self.entries.get(&hash).ok_or_else(|| ChatError::ReplayMiss(hash.clone()))?;
        let mut served = self.served.lock().expect("replay counter poisoned");
        let n = served.entry(hash).or_default();
        let text = responses[(*n).min(responses.len() - 1)].clone();
        *n += 1;
        Ok(text)
    }
}
