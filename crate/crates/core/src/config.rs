//! Runtime configuration: one JSON file plus `CS_*` environment overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::SegmentedArticle;
use crate::judge::provider::{HttpChatProvider, HttpChatSettings};
use crate::judge::{ChatProvider, Judge, JudgeConfig, PromptTemplates, ReplayProvider};
use crate::location_rules::{EntityCache, IndicatorTable};
use crate::pipeline::document::DEFAULT_HIGHLIGHT_MIN_COMMENTS;
use crate::pipeline::{Pipeline, Strategy, DEFAULT_WORKERS};
use crate::semantic_rules::CueTable;
use crate::similarity::{CachedEmbedder, EmbeddingProvider, HashedNgramEmbedder, HttpEmbeddingProvider, DEFAULT_DIMENSION};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Malformed(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("environment variable {name}: {message}")]
    Env { name: String, message: String },
    #[error("{0}")]
    Setup(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChatConfig {
    /// OpenAI-compatible chat completions URL.
    pub endpoint: Option<String>,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout_seconds: u64,
    pub retries: usize,
    pub max_in_flight: usize,
}

impl Default for ChatConfig {
    fn default() -> Self {
        ChatConfig {
            endpoint: None,
            model: "gpt-4o-mini".into(),
            api_key: None,
            timeout_seconds: 60,
            retries: 2,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    /// Base URL of an embedding service; the offline embedder is used when unset.
    pub endpoint: Option<String>,
    pub dimension: usize,
    pub api_key: Option<String>,
    pub timeout_seconds: u64,
    pub max_in_flight: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig { endpoint: None, dimension: DEFAULT_DIMENSION, api_key: None, timeout_seconds: 30, max_in_flight: 4 }
    }
}

/// Threshold overrides. Unset values keep those of the cue and indicator tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub semantic: Option<f64>,
    pub location: Option<f64>,
    pub overlap: Option<f64>,
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub chat: ChatConfig,
    pub embedding: EmbeddingConfig,
    pub thresholds: Thresholds,
    pub highlight_min_comments: usize,
    pub parse_retries: usize,
    pub workers: usize,
    pub cue_table: Option<PathBuf>,
    pub indicator_table: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    /// Replay judge answers from this JSONL transcript instead of calling a model.
    pub transcript: Option<PathBuf>,
    pub listen: String,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            chat: ChatConfig::default(),
            embedding: EmbeddingConfig::default(),
            thresholds: Thresholds::default(),
            highlight_min_comments: DEFAULT_HIGHLIGHT_MIN_COMMENTS,
            parse_retries: crate::judge::DEFAULT_PARSE_RETRIES,
            workers: DEFAULT_WORKERS,
            cue_table: None,
            indicator_table: None,
            prompts_dir: None,
            transcript: None,
            listen: "127.0.0.1:8080".into(),
        }
    }
}

fn parse_env<T: std::str::FromStr>(name: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| ConfigError::Env { name: name.to_string(), message: e.to_string() })
}

impl Config {
    pub fn from_json(json: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(json).map_err(|e| ConfigError::Malformed(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Optional file, then the process environment, then validation.
    pub fn resolve(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        config.apply_env(std::env::vars())?;
        config.validate()?;
        Ok(config)
    }

    /// Applies `CS_*` overrides from `vars`; other variables are ignored.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (name, value) in vars {
            let Some(key) = name.strip_prefix("CS_") else { continue };
            let v = value.clone();
            match key {
                "CHAT_ENDPOINT" => self.chat.endpoint = Some(v),
                "CHAT_MODEL" => self.chat.model = v,
                "CHAT_API_KEY" => self.chat.api_key = Some(v),
                "CHAT_TIMEOUT_SECONDS" => self.chat.timeout_seconds = parse_env(&name, &v)?,
                "CHAT_RETRIES" => self.chat.retries = parse_env(&name, &v)?,
                "MAX_IN_FLIGHT" => self.chat.max_in_flight = parse_env(&name, &v)?,
                "EMBEDDING_ENDPOINT" => self.embedding.endpoint = Some(v),
                "EMBEDDING_API_KEY" => self.embedding.api_key = Some(v),
                "EMBEDDING_DIMENSION" => self.embedding.dimension = parse_env(&name, &v)?,
                "TAU_SEM" => self.thresholds.semantic = Some(parse_env(&name, &v)?),
                "TAU_LOC" => self.thresholds.location = Some(parse_env(&name, &v)?),
                "TAU_OVERLAP" => self.thresholds.overlap = Some(parse_env(&name, &v)?),
                "TAU_CONF" => self.thresholds.confidence = Some(parse_env(&name, &v)?),
                "HIGHLIGHT_K" => self.highlight_min_comments = parse_env(&name, &v)?,
                "PARSE_RETRIES" => self.parse_retries = parse_env(&name, &v)?,
                "WORKERS" => self.workers = parse_env(&name, &v)?,
                "CUE_TABLE" => self.cue_table = Some(v.into()),
                "INDICATOR_TABLE" => self.indicator_table = Some(v.into()),
                "PROMPTS_DIR" => self.prompts_dir = Some(v.into()),
                "TRANSCRIPT" => self.transcript = Some(v.into()),
                "LISTEN" => self.listen = v,
                "LOG" => {}
                _ => tracing::warn!(variable = %name, "unknown CS_ variable ignored"),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.thresholds;
        for (name, v) in [("semantic", t.semantic), ("location", t.location), ("overlap", t.overlap), ("confidence", t.confidence)] {
            if let Some(v) = v {
                if !(v > 0.0 && v < 1.0) {
                    return Err(ConfigError::Invalid(format!("threshold `{name}` = {v} must lie in (0,1)")));
                }
            }
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.highlight_min_comments == 0 {
            return Err(ConfigError::Invalid("highlight_min_comments must be at least 1".into()));
        }
        if self.chat.max_in_flight == 0 || self.embedding.max_in_flight == 0 {
            return Err(ConfigError::Invalid("max_in_flight must be at least 1".into()));
        }
        Ok(())
    }

    pub fn cue_table(&self) -> Result<CueTable, ConfigError> {
        let table = match &self.cue_table {
            Some(p) => CueTable::load(p).map_err(|e| ConfigError::Setup(e.to_string()))?,
            None => CueTable::default(),
        };
        Ok(match self.thresholds.semantic {
            Some(t) => table.with_semantic_threshold(t),
            None => table,
        })
    }

    pub fn indicator_table(&self) -> Result<IndicatorTable, ConfigError> {
        let table = match &self.indicator_table {
            Some(p) => IndicatorTable::load(p).map_err(|e| ConfigError::Setup(e.to_string()))?,
            None => IndicatorTable::default(),
        };
        let location = self.thresholds.location.unwrap_or(table.location_threshold());
        let overlap = self.thresholds.overlap.unwrap_or(table.overlap_threshold());
        Ok(table.with_thresholds(location, overlap))
    }

    pub fn embedder(&self) -> Result<Arc<dyn EmbeddingProvider>, ConfigError> {
        Ok(match &self.embedding.endpoint {
            Some(url) => Arc::new(CachedEmbedder::new(
                HttpEmbeddingProvider::new(
                    url,
                    self.embedding.dimension,
                    self.embedding.api_key.clone(),
                    self.embedding.max_in_flight,
                    Duration::from_secs(self.embedding.timeout_seconds),
                )
                .map_err(|e| ConfigError::Setup(e.to_string()))?,
            )),
            None => Arc::new(CachedEmbedder::new(HashedNgramEmbedder::new(self.embedding.dimension))),
        })
    }

    /// The configured chat provider: a transcript replay if one is set,
    /// otherwise the remote endpoint, otherwise none.
    pub fn chat_provider(&self) -> Result<Option<Arc<dyn ChatProvider>>, ConfigError> {
        if let Some(path) = &self.transcript {
            let replay = ReplayProvider::load(path).map_err(|e| ConfigError::Setup(e.to_string()))?;
            return Ok(Some(Arc::new(replay)));
        }
        let Some(endpoint) = &self.chat.endpoint else { return Ok(None) };
        let provider = HttpChatProvider::new(HttpChatSettings {
            endpoint: endpoint.clone(),
            model: self.chat.model.clone(),
            api_key: self.chat.api_key.clone(),
            max_in_flight: self.chat.max_in_flight,
            timeout: Duration::from_secs(self.chat.timeout_seconds),
            retries: self.chat.retries,
        })
        .map_err(|e| ConfigError::Setup(e.to_string()))?;
        Ok(Some(Arc::new(provider)))
    }

    pub fn judge(&self, provider: Arc<dyn ChatProvider>) -> Result<Judge, ConfigError> {
        let mut config = JudgeConfig { parse_retries: self.parse_retries, ..JudgeConfig::default() };
        if let Some(t) = self.thresholds.confidence {
            config.confidence_threshold = t;
        }
        let templates = match &self.prompts_dir {
            Some(dir) => PromptTemplates::with_overrides(dir).map_err(|e| ConfigError::Setup(e.to_string()))?,
            None => PromptTemplates::default(),
        };
        Ok(Judge::new(provider).with_config(config).with_templates(templates))
    }

    /// Builds the pipeline for `strategy`. A judge-backed strategy needs a
    /// chat provider. Entities come from the cache beside `corpus_path`,
    /// extracted with the judge when the cache is missing.
    pub fn pipeline(
        &self,
        strategies: &[Strategy],
        corpus_path: &Path,
        article: &SegmentedArticle,
        provider: Option<Arc<dyn ChatProvider>>,
    ) -> Result<(Pipeline, Vec<String>), ConfigError> {
        let needs_judge = strategies.iter().any(|s| s.uses_judge());
        let judge = match (needs_judge, provider) {
            (false, _) => None,
            (true, Some(p)) => Some(self.judge(p)?),
            (true, None) => {
                return Err(ConfigError::Setup(
                    "this strategy needs a chat provider: set chat.endpoint or a transcript".into(),
                ))
            }
        };
        let cache = EntityCache::path_for(corpus_path);
        let (entities, warnings) = EntityCache::load_or_extract(&cache, article, judge.as_ref())
            .map_err(|e| ConfigError::Setup(e.to_string()))?;
        let mut pipeline = Pipeline::new(self.embedder()?).with_entities(entities).with_workers(self.workers);
        pipeline.cues = self.cue_table()?;
        pipeline.indicators = self.indicator_table()?;
        pipeline.judge = judge;
        Ok((pipeline, warnings))
    }
}
