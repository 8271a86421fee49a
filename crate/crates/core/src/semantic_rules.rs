//! Rule-stage semantic classification.
//!
//! Each comment sentence is checked in layers: the trailing punctuation run
//! against the symbol sets, then keyword phrases and the sarcasm contrast
//! pattern (a positive-emotion word next to a negative-context word), and
//! finally, only for sentences that produced nothing so far, embedding
//! similarity against every keyword. The per-sentence candidates are merged
//! into one deduplicated candidate set for the comment.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::segment::trailing_punctuation;
use crate::corpus::{Comment, CommentSentence};
use crate::labels::SemanticLabel;
use crate::phrase::Phrase;
use crate::similarity::{cosine, EmbedError, EmbeddingProvider};

pub const DEFAULT_SEMANTIC_THRESHOLD: f64 = 0.60;

#[derive(Debug, thiserror::Error)]
pub enum CueTableError {
    #[error("failed to read cue table {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed cue table: {0}")]
    Malformed(String),
    #[error("invalid cue table: {0}")]
    Invalid(String),
}

/// On-disk cue table layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CueTableFile {
    #[serde(default)]
    pub symbols: BTreeMap<SemanticLabel, Vec<String>>,
    #[serde(default)]
    pub keywords: BTreeMap<SemanticLabel, Vec<String>>,
    #[serde(default)]
    pub positive: Vec<String>,
    #[serde(default)]
    pub negative: Vec<String>,
    pub semantic_threshold: f64,
}

#[derive(Debug, Clone)]
struct Cue {
    text: String,
    phrase: Phrase,
}

impl Cue {
    fn compile(text: &str) -> Option<Cue> {
        Phrase::new(text).map(|phrase| Cue { text: text.trim().to_string(), phrase })
    }
}

fn compile_all(texts: &[String]) -> Vec<Cue> {
    texts.iter().filter_map(|t| Cue::compile(t)).collect()
}

/// Symbol sets, keyword sets and sentiment contrast lists driving the rules.
#[derive(Debug, Clone)]
pub struct CueTable {
    symbols: BTreeMap<SemanticLabel, Vec<String>>,
    keywords: BTreeMap<SemanticLabel, Vec<Cue>>,
    positive: Vec<Cue>,
    negative: Vec<Cue>,
    semantic_threshold: f64,
}

impl CueTable {
    pub fn from_file_record(file: CueTableFile) -> Result<Self, CueTableError> {
        let has = |label: SemanticLabel, symbols: &[&str]| {
            let set = file.symbols.get(&label);
            symbols.iter().all(|s| set.is_some_and(|v| v.iter().any(|x| x == s)))
        };
        if !has(SemanticLabel::Question, &["?", "？"]) {
            return Err(CueTableError::Invalid("question symbols must include ? and ？".into()));
        }
        if !has(SemanticLabel::Exclamation, &["!", "！"]) {
            return Err(CueTableError::Invalid("exclamation symbols must include ! and ！".into()));
        }
        let positive: BTreeSet<String> = file.positive.iter().map(|s| s.trim().to_lowercase()).collect();
        if let Some(both) = file.negative.iter().map(|s| s.trim().to_lowercase()).find(|n| positive.contains(n)) {
            return Err(CueTableError::Invalid(format!("`{both}` is in both sentiment lists")));
        }
        let t = file.semantic_threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(CueTableError::Invalid(format!("semantic_threshold {t} outside (0, 1)")));
        }
        Ok(CueTable {
            symbols: file.symbols.into_iter().map(|(l, v)| (l, v.into_iter().filter(|s| !s.is_empty()).collect())).collect(),
            keywords: file.keywords.iter().map(|(l, v)| (*l, compile_all(v))).collect(),
            positive: compile_all(&file.positive),
            negative: compile_all(&file.negative),
            semantic_threshold: t,
        })
    }

    pub fn from_json(json: &str) -> Result<Self, CueTableError> {
        let file: CueTableFile = serde_json::from_str(json).map_err(|e| CueTableError::Malformed(e.to_string()))?;
        Self::from_file_record(file)
    }

    pub fn load(path: &Path) -> Result<Self, CueTableError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CueTableError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_file_record(&self) -> CueTableFile {
        let texts = |cues: &[Cue]| cues.iter().map(|c| c.text.clone()).collect::<Vec<_>>();
        CueTableFile {
            symbols: self.symbols.clone(),
            keywords: self.keywords.iter().map(|(l, v)| (*l, texts(v))).collect(),
            positive: texts(&self.positive),
            negative: texts(&self.negative),
            semantic_threshold: self.semantic_threshold,
        }
    }

    pub fn semantic_threshold(&self) -> f64 {
        self.semantic_threshold
    }

    pub fn with_semantic_threshold(mut self, threshold: f64) -> Self {
        self.semantic_threshold = threshold;
        self
    }

    pub fn keywords(&self, label: SemanticLabel) -> impl Iterator<Item = &str> {
        self.keywords.get(&label).into_iter().flatten().map(|c| c.text.as_str())
    }

    pub fn add_keyword(&mut self, label: SemanticLabel, keyword: &str) {
        if let Some(cue) = Cue::compile(keyword) {
            self.keywords.entry(label).or_default().push(cue);
        }
    }
}

impl Default for CueTable {
    fn default() -> Self {
        CueTable::from_json(include_str!("../data/cues.json")).expect("shipped cue table is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticRule {
    Symbol,
    Keyword,
    SarcasmContrast,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemanticEvidence {
    pub rule: SemanticRule,
    pub cue: String,
    pub sentence: usize,
}

/// Rule-stage semantic candidates for one comment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SemanticCandidates {
    pub per_label_evidence: BTreeMap<SemanticLabel, Vec<SemanticEvidence>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SemanticCandidates {
    pub fn labels(&self) -> BTreeSet<SemanticLabel> {
        self.per_label_evidence.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.per_label_evidence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_label_evidence.is_empty()
    }

    fn add(&mut self, label: SemanticLabel, evidence: SemanticEvidence) {
        let list = self.per_label_evidence.entry(label).or_default();
        if !list.contains(&evidence) {
            list.push(evidence);
        }
    }
}

/// Labels whose symbol set intersects the sentence's trailing punctuation run.
pub fn match_symbols(sentence: &CommentSentence, cues: &CueTable) -> BTreeSet<SemanticLabel> {
    symbol_hits(sentence, cues).into_iter().map(|(l, _)| l).collect()
}

fn symbol_hits(sentence: &CommentSentence, cues: &CueTable) -> Vec<(SemanticLabel, String)> {
    let run = trailing_punctuation(&sentence.text);
    if run.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (label, symbols) in &cues.symbols {
        if let Some(symbol) = symbols.iter().find(|s| run.contains(s.as_str())) {
            out.push((*label, symbol.clone()));
        }
    }
    out
}

/// Labels with a keyword occurring in the sentence.
pub fn match_keywords(sentence: &CommentSentence, cues: &CueTable) -> BTreeSet<SemanticLabel> {
    keyword_hits(sentence, cues).into_iter().map(|(l, _)| l).collect()
}

fn keyword_hits(sentence: &CommentSentence, cues: &CueTable) -> Vec<(SemanticLabel, String)> {
    cues.keywords
        .iter()
        .filter_map(|(label, list)| {
            list.iter().find(|c| c.phrase.matches(&sentence.text)).map(|c| (*label, c.text.clone()))
        })
        .collect()
}

/// Sarcasm when the sentence holds both a positive-emotion cue and a
/// negative-context cue.
pub fn match_sarcasm(sentence: &CommentSentence, cues: &CueTable) -> Option<SemanticLabel> {
    sarcasm_hit(sentence, cues).map(|_| SemanticLabel::Sarcasm)
}

fn sarcasm_hit(sentence: &CommentSentence, cues: &CueTable) -> Option<String> {
    let pos = cues.positive.iter().find(|c| c.phrase.matches(&sentence.text))?;
    let neg = cues.negative.iter().find(|c| c.phrase.matches(&sentence.text))?;
    Some(format!("{} + {}", pos.text, neg.text))
}

/// Labels whose best keyword similarity to the sentence exceeds the threshold.
pub fn match_semantic(
    sentence: &CommentSentence,
    cues: &CueTable,
    provider: &dyn EmbeddingProvider,
) -> Result<BTreeSet<SemanticLabel>, EmbedError> {
    Ok(semantic_hits(sentence, cues, provider)?.into_iter().map(|(l, _, _)| l).collect())
}

/// Best-scoring keyword per label, for labels above the threshold.
pub fn semantic_hits(
    sentence: &CommentSentence,
    cues: &CueTable,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<(SemanticLabel, String, f64)>, EmbedError> {
    if sentence.text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let target = provider.embed(&sentence.text)?;
    let mut out = Vec::new();
    for (label, list) in &cues.keywords {
        let mut best: Option<(&str, f64)> = None;
        for cue in list {
            let v = provider.embed(&cue.text)?;
            let sim = cosine(&target, &v)
                .map_err(|e| EmbedError::DimensionMismatch { expected: e.0, got: e.1 })?;
            if best.is_none_or(|(_, b)| sim > b) {
                best = Some((cue.text.as_str(), sim));
            }
        }
        if let Some((cue, sim)) = best {
            if sim > cues.semantic_threshold {
                out.push((*label, cue.to_string(), sim));
            }
        }
    }
    Ok(out)
}

/// Candidates contributed by one sentence.
pub fn classify_sentence(
    sentence: &CommentSentence,
    cues: &CueTable,
    provider: &dyn EmbeddingProvider,
) -> SemanticCandidates {
    let mut out = SemanticCandidates::default();
    let idx = sentence.index;
    for (label, cue) in symbol_hits(sentence, cues) {
        out.add(label, SemanticEvidence { rule: SemanticRule::Symbol, cue, sentence: idx });
    }
    for (label, cue) in keyword_hits(sentence, cues) {
        out.add(label, SemanticEvidence { rule: SemanticRule::Keyword, cue, sentence: idx });
    }
    if let Some(cue) = sarcasm_hit(sentence, cues) {
        out.add(SemanticLabel::Sarcasm, SemanticEvidence { rule: SemanticRule::SarcasmContrast, cue, sentence: idx });
    }
    if out.is_empty() {
        match semantic_hits(sentence, cues, provider) {
            Ok(hits) => {
                for (label, cue, sim) in hits {
                    let cue = format!("{cue} ({sim:.3})");
                    out.add(label, SemanticEvidence { rule: SemanticRule::Semantic, cue, sentence: idx });
                }
            }
            Err(e) => {
                tracing::warn!(sentence = idx, error = %e, "semantic matching skipped");
                out.warnings.push(format!("sentence {idx}: semantic matching skipped: {e}"));
            }
        }
    }
    out
}

/// Merges the per-sentence candidates of every sentence of `comment`.
pub fn classify_rules_semantic(
    comment: &Comment,
    cues: &CueTable,
    provider: &dyn EmbeddingProvider,
) -> SemanticCandidates {
    let mut merged = SemanticCandidates::default();
    for sentence in &comment.sentences {
        let part = classify_sentence(sentence, cues, provider);
        for (label, evidence) in part.per_label_evidence {
            for e in evidence {
                merged.add(label, e);
            }
        }
        merged.warnings.extend(part.warnings);
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Language, Tokenizer};
    use crate::similarity::HashedNgramEmbedder;

    fn sentence(text: &str) -> CommentSentence {
        CommentSentence::from_text(1, text, &Tokenizer::for_language(Language::detect(text)))
    }

    fn labels(xs: &[SemanticLabel]) -> BTreeSet<SemanticLabel> {
        xs.iter().copied().collect()
    }

    use SemanticLabel::*;

    #[test]
    fn symbols() {
        let cues = CueTable::default();
        assert_eq!(match_symbols(&sentence("这是真的吗？"), &cues), labels(&[Question]));
        assert_eq!(match_symbols(&sentence("太离谱了！"), &cues), labels(&[Exclamation]));
        assert_eq!(match_symbols(&sentence("认真的!?"), &cues), labels(&[Question, Exclamation]));
        assert!(match_symbols(&sentence("Is this a question"), &cues).is_empty());
    }

    #[test]
    fn keywords() {
        let cues = CueTable::default();
        assert_eq!(match_keywords(&sentence("I think the ruling was fair"), &cues), labels(&[Statement]));
        assert_eq!(match_keywords(&sentence("You should record evidence first"), &cues), labels(&[Suggestion]));
        assert!(match_keywords(&sentence("ok"), &cues).is_empty());
        assert_eq!(match_keywords(&sentence("我建议先报警"), &cues), labels(&[Suggestion]));
    }

    #[test]
    fn sarcasm_contrast() {
        let cues = CueTable::default();
        assert_eq!(match_sarcasm(&sentence("I just love traffic jams"), &cues), Some(Sarcasm));
        assert_eq!(match_sarcasm(&sentence("I love sunny days"), &cues), None);
        assert_eq!(match_sarcasm(&sentence("Overtime again. Wonderful."), &cues), Some(Sarcasm));
        assert_eq!(match_sarcasm(&sentence("Overtime again"), &cues), None);
    }

    #[test]
    fn semantic_identity_and_empty() {
        let cues = CueTable::default();
        let e = HashedNgramEmbedder::default();
        assert!(match_semantic(&sentence("suggest"), &cues, &e).unwrap().contains(&Suggestion));
        assert!(match_semantic(&sentence(""), &cues, &e).unwrap().is_empty());
    }

    #[test]
    fn metro_suggestion_regression() {
        // Frozen from the fallback embedder: best Suggestion keyword cosine is
        // far below the 0.60 threshold, so the label is excluded.
        let cues = CueTable::default();
        let e = HashedNgramEmbedder::default();
        let hits = match_semantic(&sentence("maybe try taking the metro instead"), &cues, &e).unwrap();
        assert!(!hits.contains(&Suggestion));
        assert!(hits.is_empty());
    }

    #[test]
    fn comment_union() {
        let cues = CueTable::default();
        let e = HashedNgramEmbedder::default();
        let c = Comment::new("c", "Why? You should appeal.", 0, 0, &Tokenizer::for_language(Language::En));
        let cands = classify_rules_semantic(&c, &cues, &e);
        assert_eq!(cands.labels(), labels(&[Question, Suggestion]));
        assert!(cands.per_label_evidence.values().all(|v| !v.is_empty()));
    }

    #[test]
    fn no_cues_no_candidates() {
        let cues = CueTable::default();
        let e = HashedNgramEmbedder::default();
        let c = Comment::new("c", "The bus arrived late", 0, 0, &Tokenizer::for_language(Language::En));
        assert!(classify_rules_semantic(&c, &cues, &e).is_empty());
    }

    #[test]
    fn table_validation() {
        let ok = CueTable::default().to_file_record();
        let mut bad = ok.clone();
        bad.symbols.remove(&Question);
        assert!(CueTable::from_file_record(bad).is_err());
        let mut bad = ok.clone();
        bad.negative.push("love".into());
        assert!(CueTable::from_file_record(bad).is_err());
        let mut bad = ok;
        bad.semantic_threshold = 1.0;
        assert!(CueTable::from_file_record(bad).is_err());
    }
}
