//! Articles, comments and their segmentation into indexed units.
//!
//! Sentence numbering is global across the article: the first sentence of
//! paragraph 2 continues from the last sentence of paragraph 1. Positional
//! indicators like "last sentence" therefore address the whole article.

pub mod segment;
pub mod tokenize;

use std::collections::{BTreeSet, HashSet};
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::labels::{Anchor, LocationLevel, SemanticLabel};
pub use tokenize::{tokenize, Language, StopWords, Token, Tokenizer};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("failed to read {}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("empty body")]
    EmptyBody,
    #[error("duplicate comment id `{0}`")]
    DuplicateCommentId(String),
    #[error("gold index out of range: comment `{comment}` references {level} {index}")]
    GoldIndexOutOfRange { comment: String, level: LocationLevel, index: usize },
    #[error("invalid gold label on comment `{comment}`: {reason}")]
    InvalidGold { comment: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub global_index: usize,
    pub paragraph_index: usize,
    pub text: String,
    pub tokens: Vec<String>,
    pub ending_punctuation: Option<char>,
    /// Byte range in the article body; sentence spans tile the whole body.
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub index: usize,
    pub sentences: Vec<Sentence>,
}

impl Paragraph {
    pub fn text(&self) -> String {
        let texts: Vec<&str> = self.sentences.iter().map(|s| s.text.as_str()).collect();
        texts.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedArticle {
    pub id: String,
    pub title: String,
    pub body: String,
    pub language: Language,
    pub paragraphs: Vec<Paragraph>,
}

impl SegmentedArticle {
    pub fn new(id: impl Into<String>, title: impl Into<String>, body: impl Into<String>) -> Result<Self, CorpusError> {
        let body = body.into();
        let language = Language::detect(&body);
        Self::with_language(id, title, body, language)
    }

    pub fn with_language(
        id: impl Into<String>,
        title: impl Into<String>,
        body: impl Into<String>,
        language: Language,
    ) -> Result<Self, CorpusError> {
        let body = body.into();
        let paragraphs = segment_text(&body, language)?;
        Ok(SegmentedArticle { id: id.into(), title: title.into(), body, language, paragraphs })
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.paragraphs.iter().flat_map(|p| p.sentences.iter())
    }

    pub fn sentence_count(&self) -> usize {
        self.paragraphs.iter().map(|p| p.sentences.len()).sum()
    }

    pub fn paragraph_count(&self) -> usize {
        self.paragraphs.len()
    }

    pub fn sentence(&self, global_index: usize) -> Option<&Sentence> {
        if global_index == 0 {
            return None;
        }
        self.sentences().nth(global_index - 1)
    }

    pub fn paragraph(&self, index: usize) -> Option<&Paragraph> {
        index.checked_sub(1).and_then(|i| self.paragraphs.get(i))
    }

    pub fn tokenizer(&self) -> Tokenizer {
        Tokenizer::for_language(self.language)
    }

    /// Whether every index of `anchor` exists in this article.
    pub fn contains_anchor(&self, anchor: &Anchor) -> bool {
        let limit = match anchor.level {
            LocationLevel::Global => return anchor.indices.is_empty(),
            LocationLevel::Sentence => self.sentence_count(),
            LocationLevel::Paragraph => self.paragraph_count(),
        };
        !anchor.indices.is_empty() && anchor.indices.iter().all(|&i| i >= 1 && i <= limit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentSentence {
    pub index: usize,
    pub text: String,
    pub tokens: Vec<String>,
    pub ending_punctuation: Option<char>,
}

impl CommentSentence {
    /// Builds a single comment sentence without running the segmenter.
    pub fn from_text(index: usize, text: &str, tokenizer: &Tokenizer) -> Self {
        let text = text.trim();
        CommentSentence {
            index,
            text: text.to_string(),
            tokens: tokenizer.tokenize(text),
            ending_punctuation: segment::ending_punctuation(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub semantic: SemanticLabel,
    pub level: LocationLevel,
    #[serde(default)]
    pub indices: BTreeSet<usize>,
}

impl GoldLabel {
    pub fn anchor(&self) -> Anchor {
        Anchor { level: self.level, indices: self.indices.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub text: String,
    pub likes: u64,
    pub replies: u64,
    pub sentences: Vec<CommentSentence>,
    pub gold: Option<GoldLabel>,
}

impl Comment {
    pub fn new(id: impl Into<String>, text: impl Into<String>, likes: u64, replies: u64, tokenizer: &Tokenizer) -> Self {
        let text = text.into();
        let sentences = segment_comment(&text, tokenizer);
        Comment { id: id.into(), text, likes, replies, sentences, gold: None }
    }

    pub fn with_gold(mut self, gold: GoldLabel) -> Self {
        self.gold = Some(gold);
        self
    }

    /// The comment word set: union of the token sets of its sentences.
    pub fn token_set(&self) -> BTreeSet<String> {
        self.sentences.iter().flat_map(|s| s.tokens.iter().cloned()).collect()
    }
}

/// Splits `body` into indexed paragraphs and sentences.
pub fn segment_text(body: &str, language: Language) -> Result<Vec<Paragraph>, CorpusError> {
    segment_with(body, &Tokenizer::for_language(language))
}

pub fn segment_with(body: &str, tokenizer: &Tokenizer) -> Result<Vec<Paragraph>, CorpusError> {
    if body.trim().is_empty() {
        return Err(CorpusError::EmptyBody);
    }
    let mut spans: Vec<(usize, Range<usize>)> = Vec::new();
    for (p, range) in segment::paragraph_ranges(body).into_iter().enumerate() {
        let para = &body[range.clone()];
        for s in segment::sentence_ranges(para) {
            spans.push((p + 1, range.start + s.start..range.start + s.end));
        }
    }
    // Stretch spans so they tile the body: blank lines and trailing
    // whitespace belong to the preceding sentence.
    if let Some(first) = spans.first_mut() {
        first.1.start = 0;
    }
    for i in 1..spans.len() {
        let next_start = spans[i].1.start;
        spans[i - 1].1.end = next_start;
    }
    if let Some(last) = spans.last_mut() {
        last.1.end = body.len();
    }

    let mut paragraphs: Vec<Paragraph> = Vec::new();
    for (global, (p, span)) in spans.into_iter().enumerate() {
        let text = body[span.clone()].trim().to_string();
        let sentence = Sentence {
            global_index: global + 1,
            paragraph_index: p,
            tokens: tokenizer.tokenize(&text),
            ending_punctuation: segment::ending_punctuation(&text),
            text,
            span,
        };
        match paragraphs.last_mut() {
            Some(para) if para.index == p => para.sentences.push(sentence),
            _ => paragraphs.push(Paragraph { index: p, sentences: vec![sentence] }),
        }
    }
    Ok(paragraphs)
}

/// Comment sentences, numbered from 1. Paragraph breaks inside a comment are
/// treated like any other whitespace.
pub fn segment_comment(text: &str, tokenizer: &Tokenizer) -> Vec<CommentSentence> {
    segment::paragraph_ranges(text)
        .into_iter()
        .flat_map(|p| {
            let para = &text[p];
            segment::sentence_ranges(para).into_iter().map(move |r| para[r].trim().to_string())
        })
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, s)| CommentSentence::from_text(i + 1, &s, tokenizer))
        .collect()
}

// ---------------------------------------------------------------------------
// Corpus JSON

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArticleRecord {
    pub id: String,
    pub title: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<Language>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommentRecord {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub likes: u64,
    #[serde(default)]
    pub replies: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<GoldLabel>,
}

/// On-disk corpus layout: one article plus its comments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub article: ArticleRecord,
    #[serde(default)]
    pub comments: Vec<CommentRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub article: SegmentedArticle,
    pub comments: Vec<Comment>,
    pub meta: Option<serde_json::Value>,
    /// Whether the language was given explicitly in the source file.
    explicit_language: bool,
}

impl Corpus {
    pub fn from_file_record(file: CorpusFile) -> Result<Self, CorpusError> {
        let explicit_language = file.article.language.is_some();
        let language = file.article.language.unwrap_or_else(|| Language::detect(&file.article.body));
        let article =
            SegmentedArticle::with_language(file.article.id, file.article.title, file.article.body, language)?;
        let tokenizer = article.tokenizer();
        let mut seen = HashSet::new();
        let mut comments = Vec::with_capacity(file.comments.len());
        for record in file.comments {
            if !seen.insert(record.id.clone()) {
                return Err(CorpusError::DuplicateCommentId(record.id));
            }
            if let Some(gold) = &record.gold {
                validate_gold(&record.id, gold, &article)?;
            }
            let mut comment = Comment::new(record.id, record.text, record.likes, record.replies, &tokenizer);
            comment.gold = record.gold;
            comments.push(comment);
        }
        Ok(Corpus { article, comments, meta: file.meta, explicit_language })
    }

    pub fn parse(json: &str) -> Result<Self, CorpusError> {
        let file: CorpusFile = serde_json::from_str(json).map_err(|e| CorpusError::Malformed(e.to_string()))?;
        Self::from_file_record(file)
    }

    pub fn to_file_record(&self) -> CorpusFile {
        CorpusFile {
            article: ArticleRecord {
                id: self.article.id.clone(),
                title: self.article.title.clone(),
                body: self.article.body.clone(),
                language: self.explicit_language.then_some(self.article.language),
            },
            comments: self
                .comments
                .iter()
                .map(|c| CommentRecord {
                    id: c.id.clone(),
                    text: c.text.clone(),
                    likes: c.likes,
                    replies: c.replies,
                    gold: c.gold.clone(),
                })
                .collect(),
            meta: self.meta.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_record()).expect("corpus records always serialize")
    }

    pub fn has_complete_gold(&self) -> bool {
        self.comments.iter().all(|c| c.gold.is_some())
    }
}

fn validate_gold(comment: &str, gold: &GoldLabel, article: &SegmentedArticle) -> Result<(), CorpusError> {
    let limit = match gold.level {
        LocationLevel::Global => {
            if !gold.indices.is_empty() {
                return Err(CorpusError::InvalidGold {
                    comment: comment.to_string(),
                    reason: "global labels carry no indices".into(),
                });
            }
            return Ok(());
        }
        LocationLevel::Sentence => article.sentence_count(),
        LocationLevel::Paragraph => article.paragraph_count(),
    };
    if gold.indices.is_empty() {
        return Err(CorpusError::InvalidGold {
            comment: comment.to_string(),
            reason: format!("{} labels need at least one index", gold.level),
        });
    }
    if let Some(&bad) = gold.indices.iter().find(|&&i| i == 0 || i > limit) {
        return Err(CorpusError::GoldIndexOutOfRange { comment: comment.to_string(), level: gold.level, index: bad });
    }
    Ok(())
}

/// Reads and segments a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(CorpusError::MissingFile(path.to_path_buf())),
        Err(source) => return Err(CorpusError::Io { path: path.to_path_buf(), source }),
    };
    Corpus::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_json(body: &str, comments: &str) -> String {
        format!(r#"{{"article":{{"id":"a","title":"T","body":{}}},"comments":{comments}}}"#, serde_json::to_string(body).unwrap())
    }

    #[test]
    fn minimal_corpus() {
        let c = Corpus::parse(&corpus_json("Hello world.", "[]")).unwrap();
        assert_eq!(c.article.paragraph_count(), 1);
        assert_eq!(c.article.sentence_count(), 1);
        assert!(c.comments.is_empty());
    }

    #[test]
    fn gold_out_of_range() {
        let comments = r#"[{"id":"c1","text":"x","gold":{"semantic":"statement","level":"sentence","indices":[99]}}]"#;
        let err = Corpus::parse(&corpus_json("One. Two. Three.", comments)).unwrap_err();
        assert!(err.to_string().contains("gold index out of range"), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let comments = r#"[{"id":"c1","text":"x"},{"id":"c1","text":"y"}]"#;
        assert!(matches!(
            Corpus::parse(&corpus_json("One.", comments)),
            Err(CorpusError::DuplicateCommentId(id)) if id == "c1"
        ));
    }

    #[test]
    fn malformed_and_negative_likes() {
        assert!(matches!(Corpus::parse("{"), Err(CorpusError::Malformed(_))));
        let comments = r#"[{"id":"c1","text":"x","likes":-3}]"#;
        assert!(matches!(Corpus::parse(&corpus_json("One.", comments)), Err(CorpusError::Malformed(_))));
    }

    #[test]
    fn global_gold_must_be_index_free() {
        let comments = r#"[{"id":"c1","text":"x","gold":{"semantic":"statement","level":"global","indices":[1]}}]"#;
        assert!(matches!(Corpus::parse(&corpus_json("One.", comments)), Err(CorpusError::InvalidGold { .. })));
        let comments = r#"[{"id":"c1","text":"x","gold":{"semantic":"statement","level":"paragraph","indices":[]}}]"#;
        assert!(matches!(Corpus::parse(&corpus_json("One.", comments)), Err(CorpusError::InvalidGold { .. })));
    }

    #[test]
    fn missing_file() {
        let err = load_corpus("/definitely/not/here.json").unwrap_err();
        assert!(err.to_string().starts_with("missing file"));
    }

    #[test]
    fn empty_body_is_an_error() {
        assert!(matches!(segment_text("  \n\n ", Language::En), Err(CorpusError::EmptyBody)));
    }

    #[test]
    fn global_sentence_numbering() {
        let paras = segment_text("A. B.\n\nC. D. E.", Language::En).unwrap();
        let idx: Vec<(usize, usize)> =
            paras.iter().flat_map(|p| p.sentences.iter().map(|s| (s.paragraph_index, s.global_index))).collect();
        assert_eq!(idx, vec![(1, 1), (1, 2), (2, 3), (2, 4), (2, 5)]);
    }

    #[test]
    fn comment_sentences() {
        let tk = Tokenizer::for_language(Language::En);
        let c = Comment::new("c", "Why? You should appeal.", 0, 0, &tk);
        let texts: Vec<&str> = c.sentences.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, vec!["Why?", "You should appeal."]);
        assert_eq!(c.sentences[0].ending_punctuation, Some('?'));
        assert!(Comment::new("b", "   ", 0, 0, &tk).sentences.is_empty());
    }
}
