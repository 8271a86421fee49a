//! Rule-stage location classification.
//!
//! Three stages run in priority order and the first one producing any
//! candidate wins: position indicator words (with an embedding fallback),
//! quoted or copied article text, and named entities.

pub mod entities;
pub mod indicators;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::segment::is_punctuation;
use crate::corpus::tokenize::words;
use crate::corpus::{Comment, SegmentedArticle, Tokenizer};
use crate::labels::{Anchor, LocationLevel};
use crate::similarity::{cosine, keyword_overlap, EmbedError, EmbeddingProvider, EmbeddingVector};
pub use entities::{distribute, extract_article_entities, find_occurrences, Entity, EntityCache, Occurrence};
pub use indicators::{resolve_ambiguous_span, IndicatorClass, IndicatorTable, SpanWord, Target};

/// Minimum word count for an unquoted clause to be treated as a citation.
pub const MIN_IMPLICIT_CITATION_WORDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationRule {
    Indicator,
    IndicatorSimilarity,
    Citation,
    CitationSimilarity,
    Entity,
    EntitySimilarity,
}

impl LocationRule {
    pub fn stage(self) -> LocationStage {
        match self {
            LocationRule::Indicator | LocationRule::IndicatorSimilarity => LocationStage::Indicator,
            LocationRule::Citation | LocationRule::CitationSimilarity => LocationStage::Citation,
            LocationRule::Entity | LocationRule::EntitySimilarity => LocationStage::Entity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationStage {
    Indicator,
    Citation,
    Entity,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocationEvidence {
    pub rule: LocationRule,
    pub cue: String,
    pub level: LocationLevel,
    pub index: Option<usize>,
}

/// Candidate anchors for one comment; each level appears once.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LocationCandidates {
    pub levels: BTreeMap<LocationLevel, BTreeSet<usize>>,
    pub evidence: Vec<LocationEvidence>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl LocationCandidates {
    pub fn add(&mut self, rule: LocationRule, cue: &str, anchor: &Anchor) {
        let slot = self.levels.entry(anchor.level).or_default();
        slot.extend(anchor.indices.iter().copied());
        let mut push = |index| {
            let e = LocationEvidence { rule, cue: cue.to_string(), level: anchor.level, index };
            if !self.evidence.contains(&e) {
                self.evidence.push(e);
            }
        };
        if anchor.indices.is_empty() {
            push(None);
        } else {
            for &i in &anchor.indices {
                push(Some(i));
            }
        }
    }

    pub fn anchors(&self) -> Vec<Anchor> {
        self.levels.iter().map(|(&level, indices)| Anchor { level, indices: indices.clone() }).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn stage(&self) -> Option<LocationStage> {
        self.evidence.first().map(|e| e.rule.stage())
    }

    /// The only anchor, when exactly one level is present.
    pub fn sole_anchor(&self) -> Option<Anchor> {
        match self.anchors().as_slice() {
            [a] => Some(a.clone()),
            _ => None,
        }
    }
}

/// Article-side state shared by all comments: the indicator table, the
/// embedder, precomputed sentence and paragraph embeddings, and entities.
pub struct LocationContext<'a> {
    pub article: &'a SegmentedArticle,
    pub table: &'a IndicatorTable,
    pub provider: &'a dyn EmbeddingProvider,
    pub entities: Vec<Entity>,
    tokenizer: Tokenizer,
    sentence_vectors: Vec<EmbeddingVector>,
    paragraph_vectors: Vec<EmbeddingVector>,
    sentence_tokens: Vec<BTreeSet<String>>,
}

impl<'a> LocationContext<'a> {
    pub fn new(
        article: &'a SegmentedArticle,
        table: &'a IndicatorTable,
        provider: &'a dyn EmbeddingProvider,
        entities: Vec<Entity>,
    ) -> Result<Self, EmbedError> {
        let sentences: Vec<&str> = article.sentences().map(|s| s.text.as_str()).collect();
        let paragraphs: Vec<String> = article.paragraphs.iter().map(|p| p.text()).collect();
        let paragraph_refs: Vec<&str> = paragraphs.iter().map(String::as_str).collect();
        Ok(LocationContext {
            article,
            table,
            provider,
            entities,
            tokenizer: article.tokenizer(),
            sentence_vectors: provider.embed_batch(&sentences)?,
            paragraph_vectors: provider.embed_batch(&paragraph_refs)?,
            sentence_tokens: article.sentences().map(|s| s.tokens.iter().cloned().collect()).collect(),
        })
    }

    /// 1-based indices of vectors whose cosine with `v` exceeds `threshold`.
    fn similar(vectors: &[EmbeddingVector], v: &EmbeddingVector, threshold: f64) -> Vec<(usize, f64)> {
        vectors
            .iter()
            .enumerate()
            .filter_map(|(i, u)| cosine(u, v).ok().filter(|c| *c > threshold).map(|c| (i + 1, c)))
            .collect()
    }
}

/// Position indicator stage, falling back to comment-to-unit similarity
/// when no indicator word resolves to a valid index.
pub fn match_indicators(comment: &Comment, ctx: &LocationContext) -> LocationCandidates {
    let mut out = LocationCandidates::default();
    let article = ctx.article;
    for m in ctx.table.find(&comment.text) {
        let cue = m.text.clone();
        match m.class {
            IndicatorClass::Global => out.add(LocationRule::Indicator, &cue, &Anchor::global()),
            IndicatorClass::Ambiguous => {
                if article.sentence_count() > 0 {
                    out.add(LocationRule::Indicator, &cue, &Anchor::sentences([article.sentence_count()]));
                    out.add(LocationRule::Indicator, &cue, &Anchor::paragraphs([article.paragraph_count()]));
                }
            }
            IndicatorClass::Sentence => {
                let idx = indicators::resolve_target(&m, article.sentence_count());
                if !idx.is_empty() {
                    out.add(LocationRule::Indicator, &cue, &Anchor::sentences(idx));
                }
            }
            IndicatorClass::Paragraph => {
                let idx = indicators::resolve_target(&m, article.paragraph_count());
                if !idx.is_empty() {
                    out.add(LocationRule::Indicator, &cue, &Anchor::paragraphs(idx));
                }
            }
        }
    }
    if !out.is_empty() {
        return out;
    }
    let v = match ctx.provider.embed(&comment.text) {
        Ok(v) => v,
        Err(e) => {
            out.warnings.push(format!("indicator similarity skipped: {e}"));
            return out;
        }
    };
    let threshold = ctx.table.location_threshold();
    for (i, c) in LocationContext::similar(&ctx.sentence_vectors, &v, threshold) {
        out.add(LocationRule::IndicatorSimilarity, &format!("cosine {c:.3}"), &Anchor::sentences([i]));
    }
    for (i, c) in LocationContext::similar(&ctx.paragraph_vectors, &v, threshold) {
        out.add(LocationRule::IndicatorSimilarity, &format!("cosine {c:.3}"), &Anchor::paragraphs([i]));
    }
    out
}

const QUOTE_PAIRS: [(char, char); 5] = [('“', '”'), ('"', '"'), ('『', '』'), ('「', '」'), ('‘', '’')];

/// Text inside quotation marks.
pub fn explicit_citations(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if let Some(&(_, close)) = QUOTE_PAIRS.iter().find(|(open, _)| *open == chars[i]) {
            if let Some(len) = chars[i + 1..].iter().position(|&c| c == close) {
                let inner: String = chars[i + 1..i + 1 + len].iter().collect();
                if !inner.trim().is_empty() {
                    out.push(inner.trim().to_string());
                }
                i += len + 2;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Unquoted clauses of at least five words, split at punctuation other than
/// apostrophes and hyphens. Word counts include stop words.
pub fn implicit_citations(text: &str) -> Vec<String> {
    text.split(|c: char| is_punctuation(c) && !matches!(c, '\'' | '’' | '-'))
        .map(str::trim)
        .filter(|clause| words(clause).len() >= MIN_IMPLICIT_CITATION_WORDS)
        .map(str::to_string)
        .collect()
}

/// Citation fragments of a comment: quoted text if there is any, otherwise
/// long clauses.
pub fn citation_fragments(text: &str) -> (Vec<String>, bool) {
    let explicit = explicit_citations(text);
    if explicit.is_empty() {
        (implicit_citations(text), false)
    } else {
        (explicit, true)
    }
}

/// Matches citation fragments to article sentences by keyword overlap, and
/// by embedding similarity for fragments without an overlap match.
pub fn match_citation(comment: &Comment, ctx: &LocationContext) -> LocationCandidates {
    let mut out = LocationCandidates::default();
    let (fragments, _) = citation_fragments(&comment.text);
    let overlap_threshold = ctx.table.overlap_threshold();
    for fragment in fragments {
        let tokens: BTreeSet<String> = ctx.tokenizer.tokenize(&fragment).into_iter().collect();
        if tokens.is_empty() {
            continue;
        }
        let mut matched = false;
        for (i, sentence_tokens) in ctx.sentence_tokens.iter().enumerate() {
            if keyword_overlap(&tokens, sentence_tokens) >= overlap_threshold {
                out.add(LocationRule::Citation, &fragment, &Anchor::sentences([i + 1]));
                matched = true;
            }
        }
        if matched {
            continue;
        }
        match ctx.provider.embed(&fragment) {
            Ok(v) => {
                for (i, _) in LocationContext::similar(&ctx.sentence_vectors, &v, ctx.table.location_threshold()) {
                    out.add(LocationRule::CitationSimilarity, &fragment, &Anchor::sentences([i]));
                }
            }
            Err(e) => out.warnings.push(format!("citation similarity skipped: {e}")),
        }
    }
    out
}

/// Whether a comment mentions an article entity: exact substring, then
/// token overlap, then similarity against the comment sentences.
fn entity_mentioned(
    entity: &Entity,
    comment: &Comment,
    comment_tokens: &BTreeSet<String>,
    sentence_vectors: &[EmbeddingVector],
    ctx: &LocationContext,
) -> Result<Option<LocationRule>, EmbedError> {
    if comment.text.to_lowercase().contains(&entity.surface.to_lowercase()) {
        return Ok(Some(LocationRule::Entity));
    }
    let tokens: BTreeSet<String> = ctx.tokenizer.tokenize(&entity.surface).into_iter().collect();
    if !tokens.is_empty() && keyword_overlap(&tokens, comment_tokens) >= ctx.table.overlap_threshold() {
        return Ok(Some(LocationRule::Entity));
    }
    if sentence_vectors.is_empty() {
        return Ok(None);
    }
    let v = ctx.provider.embed(&entity.surface)?;
    let hit = sentence_vectors.iter().any(|u| cosine(u, &v).is_ok_and(|c| c > ctx.table.location_threshold()));
    Ok(hit.then_some(LocationRule::EntitySimilarity))
}

/// Entity stage: the distribution of all matched entities' occurrences
/// decides the anchor.
pub fn match_entities(comment: &Comment, ctx: &LocationContext) -> LocationCandidates {
    let mut out = LocationCandidates::default();
    if ctx.entities.is_empty() {
        return out;
    }
    let comment_tokens = comment.token_set();
    let texts: Vec<&str> = comment.sentences.iter().map(|s| s.text.as_str()).collect();
    let sentence_vectors = match ctx.provider.embed_batch(&texts) {
        Ok(v) => v,
        Err(e) => {
            out.warnings.push(format!("entity similarity skipped: {e}"));
            Vec::new()
        }
    };
    let mut matched = Vec::new();
    let mut occurrences = BTreeSet::new();
    for entity in &ctx.entities {
        match entity_mentioned(entity, comment, &comment_tokens, &sentence_vectors, ctx) {
            Ok(Some(rule)) => {
                matched.push((rule, entity.surface.clone()));
                occurrences.extend(entity.occurrences.iter().copied());
            }
            Ok(None) => {}
            Err(e) => out.warnings.push(format!("entity similarity skipped: {e}")),
        }
    }
    let valid: BTreeSet<Occurrence> = occurrences
        .into_iter()
        .filter(|o| o.sentence >= 1 && o.sentence <= ctx.article.sentence_count())
        .collect();
    if let Some(anchor) = distribute(&valid, ctx.article.paragraph_count()) {
        for (rule, surface) in matched {
            out.add(rule, &surface, &anchor);
        }
    }
    out
}

/// Runs the three stages in priority order, stopping at the first with
/// candidates. Warnings from skipped similarity checks are carried along.
pub fn classify_rules_location(comment: &Comment, ctx: &LocationContext) -> LocationCandidates {
    let mut warnings = Vec::new();
    for stage in [match_indicators, match_citation, match_entities] {
        let mut out = stage(comment, ctx);
        if !out.is_empty() {
            warnings.append(&mut out.warnings);
            out.warnings = warnings;
            return out;
        }
        warnings.append(&mut out.warnings);
    }
    LocationCandidates { warnings, ..Default::default() }
}
