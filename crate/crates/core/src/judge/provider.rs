//! Chat-completion providers.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::replay::request_hash;
use crate::gate::InFlightGate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    VerifySingle,
    SelectBest,
    FullInfer,
    VerifyAnchor,
    GlobalSearch,
    EntityExtract,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatRequest {
    pub kind: PromptKind,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChatError {
    #[error("chat transport error: {0}")]
    Transport(String),
    #[error("no transcript entry for request {0}")]
    ReplayMiss(String),
}

pub trait ChatProvider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        (**self).complete(request)
    }
}

/// One logged exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub kind: PromptKind,
    pub prompt: String,
    pub response: Result<String, String>,
}

/// Wraps a provider, counting calls and keeping a request log.
pub struct RecordingProvider<P> {
    inner: P,
    calls: AtomicUsize,
    log: Mutex<Vec<Exchange>>,
}

impl<P: ChatProvider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        RecordingProvider { inner, calls: AtomicUsize::new(0), log: Mutex::new(Vec::new()) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn log(&self) -> Vec<Exchange> {
        self.log.lock().expect("request log poisoned").clone()
    }

    pub fn calls_of(&self, kind: PromptKind) -> usize {
        self.log.lock().expect("request log poisoned").iter().filter(|e| e.kind == kind).count()
    }

    /// Successful exchanges as transcript JSONL, grouped by hash so the file
    /// does not depend on request scheduling. Answers to the same prompt keep
    /// their call order, which replay relies on.
    pub fn transcript_jsonl(&self) -> String {
        let mut lines: Vec<(String, String)> = self
            .log()
            .into_iter()
            .filter_map(|e| {
                let response = e.response.ok()?;
                let hash = request_hash(&e.prompt);
                let line = serde_json::json!({
                    "request_hash": hash,
                    "kind": e.kind,
                    "response_text": response,
                });
                Some((hash, line.to_string()))
            })
            .collect();
        lines.sort_by(|a, b| a.0.cmp(&b.0));
        lines.dedup();
        lines.into_iter().map(|(_, l)| l + "\n").collect()
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: ChatProvider> ChatProvider for RecordingProvider<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let result = self.inner.complete(request);
        self.log.lock().expect("request log poisoned").push(Exchange {
            kind: request.kind,
            prompt: request.prompt.clone(),
            response: result.clone().map_err(|e| e.to_string()),
        });
        result
    }
}

/// A provider that is never reachable.
#[derive(Debug, Default, Clone)]
pub struct UnavailableProvider;

impl ChatProvider for UnavailableProvider {
    fn name(&self) -> &str {
        "unavailable"
    }

    fn complete(&self, _request: &ChatRequest) -> Result<String, ChatError> {
        Err(ChatError::Transport("no chat provider configured".into()))
    }
}

#[derive(Debug, Clone)]
pub struct HttpChatSettings {
    /// Full URL of an OpenAI-compatible chat completions endpoint.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub max_in_flight: usize,
    pub timeout: Duration,
    pub retries: usize,
}

/// Client for OpenAI-compatible `chat/completions` endpoints.
pub struct HttpChatProvider {
    settings: HttpChatSettings,
    client: reqwest::blocking::Client,
    gate: InFlightGate,
}

#[derive(Deserialize)]
struct CompletionBody {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

impl HttpChatProvider {
    pub fn new(settings: HttpChatSettings) -> Result<Self, ChatError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(settings.timeout)
            .build()
            .map_err(|e| ChatError::Transport(e.to_string()))?;
        let gate = InFlightGate::new(settings.max_in_flight);
        Ok(HttpChatProvider { settings, client, gate })
    }

    fn attempt(&self, prompt: &str) -> Result<String, ChatError> {
        let body = serde_json::json!({
            "model": self.settings.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.client.post(&self.settings.endpoint).json(&body);
        if let Some(key) = &self.settings.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| ChatError::Transport(e.to_string()))?;
        if !response.status().is_success() {
            return Err(ChatError::Transport(format!("status {}", response.status())));
        }
        let body: CompletionBody = response.json().map_err(|e| ChatError::Transport(e.to_string()))?;
        body.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ChatError::Transport("response without choices".into()))
    }
}

impl ChatProvider for HttpChatProvider {
    fn name(&self) -> &str {
        &self.settings.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        let _permit = self.gate.acquire();
        let mut last = ChatError::Transport("no attempt made".into());
        for attempt in 0..=self.settings.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(200 * attempt as u64));
            }
            match self.attempt(&request.prompt) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    tracing::warn!(attempt, error = %e, "chat request failed");
                    last = e;
                }
            }
        }
        Err(last)
    }
}
