//! Article entities, their cache file, and comment-side matching.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::SegmentedArticle;
use crate::judge::{EntityKind, Judge};
use crate::labels::Anchor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Occurrence {
    pub paragraph: usize,
    pub sentence: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub surface: String,
    pub kind: EntityKind,
    pub occurrences: Vec<Occurrence>,
}

/// Sentences whose text contains `surface`, ignoring case.
pub fn find_occurrences(article: &SegmentedArticle, surface: &str) -> Vec<Occurrence> {
    let needle = surface.to_lowercase();
    if needle.trim().is_empty() {
        return Vec::new();
    }
    article
        .sentences()
        .filter(|s| s.text.to_lowercase().contains(&needle))
        .map(|s| Occurrence { paragraph: s.paragraph_index, sentence: s.global_index })
        .collect()
}

/// Asks the judge for the article's entities and locates each one.
/// Entities that never occur verbatim are dropped with a warning.
pub fn extract_article_entities(article: &SegmentedArticle, judge: &Judge) -> (Vec<Entity>, Vec<String>) {
    let text = if article.title.is_empty() { article.body.clone() } else { format!("{}\n\n{}", article.title, article.body) };
    let extraction = judge.extract_entities(&text);
    let mut warnings = extraction.warnings;
    let mut seen = BTreeSet::new();
    let mut entities = Vec::new();
    for e in extraction.entities {
        if !seen.insert(e.surface.to_lowercase()) {
            continue;
        }
        let occurrences = find_occurrences(article, &e.surface);
        if occurrences.is_empty() {
            warnings.push(format!("entity `{}` does not occur in the article body", e.surface));
            continue;
        }
        entities.push(Entity { surface: e.surface, kind: e.kind, occurrences });
    }
    (entities, warnings)
}

/// Distribution rule over the occurrences of all matched entities:
/// one sentence gives that sentence, one paragraph gives that paragraph,
/// at least ceil(30%) of the paragraphs gives global, otherwise the
/// paragraphs involved.
pub fn distribute(occurrences: &BTreeSet<Occurrence>, paragraph_count: usize) -> Option<Anchor> {
    if occurrences.is_empty() {
        return None;
    }
    let sentences: BTreeSet<usize> = occurrences.iter().map(|o| o.sentence).collect();
    let paragraphs: BTreeSet<usize> = occurrences.iter().map(|o| o.paragraph).collect();
    if sentences.len() == 1 {
        return Some(Anchor::sentences(sentences));
    }
    if paragraphs.len() == 1 {
        return Some(Anchor::paragraphs(paragraphs));
    }
    let global_floor = (paragraph_count * 3).div_ceil(10);
    if paragraphs.len() >= global_floor {
        return Some(Anchor::global());
    }
    Some(Anchor::paragraphs(paragraphs))
}

pub const ENTITY_CACHE_SUFFIX: &str = ".entities.json";

/// Cache file persisted beside a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityCache {
    pub article_id: String,
    pub entities: Vec<Entity>,
}

#[derive(Debug, thiserror::Error)]
pub enum EntityCacheError {
    #[error("failed to access entity cache {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed entity cache {path}: {message}")]
    Malformed { path: String, message: String },
}

impl EntityCache {
    pub fn path_for(corpus_path: &Path) -> PathBuf {
        let mut name = corpus_path.as_os_str().to_owned();
        name.push(ENTITY_CACHE_SUFFIX);
        PathBuf::from(name)
    }

    pub fn load(path: &Path) -> Result<Option<Self>, EntityCacheError> {
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(path)
            .map_err(|source| EntityCacheError::Io { path: path.display().to_string(), source })?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| EntityCacheError::Malformed { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn save(&self, path: &Path) -> Result<(), EntityCacheError> {
        let json = serde_json::to_string_pretty(self).expect("entity cache serializes");
        std::fs::write(path, json + "\n").map_err(|source| EntityCacheError::Io { path: path.display().to_string(), source })
    }

    /// Cached entities for `article`, extracting and saving them when the
    /// cache is missing or belongs to another article. Without a judge a
    /// missing cache yields no entities.
    pub fn load_or_extract(
        path: &Path,
        article: &SegmentedArticle,
        judge: Option<&Judge>,
    ) -> Result<(Vec<Entity>, Vec<String>), EntityCacheError> {
        if let Some(cache) = Self::load(path)? {
            if cache.article_id == article.id {
                return Ok((cache.entities, Vec::new()));
            }
        }
        let Some(judge) = judge else {
            return Ok((Vec::new(), vec!["no entity cache and no judge; entity matching skipped".into()]));
        };
        let (entities, warnings) = extract_article_entities(article, judge);
        EntityCache { article_id: article.id.clone(), entities: entities.clone() }.save(path)?;
        Ok((entities, warnings))
    }
}
