//! The annotated document served to readers, and filtered views of it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{ClassifiedComment, Provenance};
use crate::corpus::{Comment, Language, SegmentedArticle};
use crate::labels::{undetermined, Anchor, LocationLevel, SemanticLabel};

pub const DEFAULT_HIGHLIGHT_MIN_COMMENTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceView {
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphView {
    pub index: usize,
    pub sentences: Vec<SentenceView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleView {
    pub id: String,
    pub title: String,
    pub language: Language,
    pub paragraphs: Vec<ParagraphView>,
}

impl ArticleView {
    pub fn of(article: &SegmentedArticle) -> Self {
        ArticleView {
            id: article.id.clone(),
            title: article.title.clone(),
            language: article.language,
            paragraphs: article
                .paragraphs
                .iter()
                .map(|p| ParagraphView {
                    index: p.index,
                    sentences: p
                        .sentences
                        .iter()
                        .map(|s| SentenceView { index: s.global_index, text: s.text.clone() })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// A comment with its classification, as shown to readers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedComment {
    pub id: String,
    pub text: String,
    pub likes: u64,
    pub replies: u64,
    #[serde(with = "undetermined")]
    pub semantic: Option<SemanticLabel>,
    #[serde(with = "undetermined")]
    pub location: Option<Anchor>,
    pub semantic_confidence: Option<f64>,
    pub location_confidence: Option<f64>,
    pub semantic_provenance: Provenance,
    pub location_provenance: Provenance,
}

/// An article token mentioned by at least `highlight_min_comments` comments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeywordHighlight {
    pub sentence: usize,
    /// Position in the sentence's token list.
    pub token: usize,
    pub text: String,
    /// Character offsets within the sentence text.
    pub start: usize,
    pub end: usize,
    pub comment_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub article: ArticleView,
    /// Every comment in corpus order.
    pub comments: Vec<AnnotatedComment>,
    pub sentence_groups: BTreeMap<usize, Vec<AnnotatedComment>>,
    pub paragraph_groups: BTreeMap<usize, Vec<AnnotatedComment>>,
    pub global_comments: Vec<AnnotatedComment>,
    /// Ids of comments without a location, most liked first.
    pub undetermined: Vec<String>,
    pub top_comment: BTreeMap<usize, String>,
    pub pie_data: BTreeMap<usize, BTreeMap<SemanticLabel, usize>>,
    pub keyword_highlights: Vec<KeywordHighlight>,
    pub highlight_min_comments: usize,
}

fn by_popularity(a: &AnnotatedComment, b: &AnnotatedComment) -> std::cmp::Ordering {
    b.likes.cmp(&a.likes).then_with(|| a.id.cmp(&b.id))
}

/// Article tokens that occur in at least `k` distinct comments.
pub fn keyword_highlights(article: &SegmentedArticle, comments: &[Comment], k: usize) -> Vec<KeywordHighlight> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for c in comments {
        for t in c.token_set() {
            *counts.entry(t).or_default() += 1;
        }
    }
    let tokenizer = article.tokenizer();
    let mut out = Vec::new();
    for s in article.sentences() {
        for (i, t) in tokenizer.tokenize_spans(&s.text).into_iter().enumerate() {
            let n = counts.get(&t.text).copied().unwrap_or(0);
            if n >= k.max(1) {
                out.push(KeywordHighlight {
                    sentence: s.global_index,
                    token: i,
                    text: t.text,
                    start: t.start,
                    end: t.end,
                    comment_count: n,
                });
            }
        }
    }
    out
}

/// Groups comments by location, ranks them by likes, and derives the
/// per-sentence top comment, pie counts and keyword highlights.
pub fn assemble_document(
    article: &SegmentedArticle,
    classified: &[ClassifiedComment],
    comments: &[Comment],
    highlight_min_comments: usize,
) -> AnnotatedDocument {
    let by_id: HashMap<&str, &ClassifiedComment> = classified.iter().map(|c| (c.id.as_str(), c)).collect();
    let annotated: Vec<AnnotatedComment> = comments
        .iter()
        .map(|c| {
            let k = by_id.get(c.id.as_str());
            AnnotatedComment {
                id: c.id.clone(),
                text: c.text.clone(),
                likes: c.likes,
                replies: c.replies,
                semantic: k.and_then(|k| k.semantic),
                location: k.and_then(|k| k.location.clone()),
                semantic_confidence: k.and_then(|k| k.semantic_confidence),
                location_confidence: k.and_then(|k| k.location_confidence),
                semantic_provenance: k.map_or(Provenance::RuleOnly, |k| k.semantic_provenance),
                location_provenance: k.map_or(Provenance::RuleOnly, |k| k.location_provenance),
            }
        })
        .collect();
    let mut doc = AnnotatedDocument {
        article: ArticleView::of(article),
        comments: annotated,
        sentence_groups: BTreeMap::new(),
        paragraph_groups: BTreeMap::new(),
        global_comments: Vec::new(),
        undetermined: Vec::new(),
        top_comment: BTreeMap::new(),
        pie_data: BTreeMap::new(),
        keyword_highlights: keyword_highlights(article, comments, highlight_min_comments),
        highlight_min_comments,
    };
    regroup(&mut doc);
    doc
}

/// Rebuilds groups, top comments and pies from `doc.comments`.
fn regroup(doc: &mut AnnotatedDocument) {
    doc.sentence_groups.clear();
    doc.paragraph_groups.clear();
    doc.global_comments.clear();
    let mut undetermined = Vec::new();
    for c in &doc.comments {
        match &c.location {
            None => undetermined.push(c.clone()),
            Some(a) => match a.level {
                LocationLevel::Global => doc.global_comments.push(c.clone()),
                LocationLevel::Sentence => {
                    for &i in &a.indices {
                        doc.sentence_groups.entry(i).or_default().push(c.clone());
                    }
                }
                LocationLevel::Paragraph => {
                    for &i in &a.indices {
                        doc.paragraph_groups.entry(i).or_default().push(c.clone());
                    }
                }
            },
        }
    }
    for group in doc.sentence_groups.values_mut().chain(doc.paragraph_groups.values_mut()) {
        group.sort_by(by_popularity);
    }
    doc.global_comments.sort_by(by_popularity);
    undetermined.sort_by(by_popularity);
    doc.undetermined = undetermined.into_iter().map(|c| c.id).collect();
    doc.top_comment = doc.sentence_groups.iter().map(|(&s, g)| (s, g[0].id.clone())).collect();
    doc.pie_data = doc
        .sentence_groups
        .iter()
        .map(|(&s, g)| {
            let mut pie = BTreeMap::new();
            for label in g.iter().filter_map(|c| c.semantic) {
                *pie.entry(label).or_default() += 1;
            }
            (s, pie)
        })
        .collect();
}

/// Which comments a view shows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub min_likes: u64,
    pub min_replies: u64,
    pub visible_labels: BTreeSet<SemanticLabel>,
    /// Whether comments without a semantic label stay visible.
    pub show_undetermined: bool,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            min_likes: 0,
            min_replies: 0,
            visible_labels: SemanticLabel::ALL.into_iter().collect(),
            show_undetermined: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid `{field}`: {message}")]
pub struct FilterParamError {
    pub field: &'static str,
    pub message: String,
}

impl FilterSpec {
    pub fn visible(&self, c: &AnnotatedComment) -> bool {
        c.likes >= self.min_likes
            && c.replies >= self.min_replies
            && match c.semantic {
                Some(l) => self.visible_labels.contains(&l),
                None => self.show_undetermined,
            }
    }

    /// Parses query-style parameters. `labels` is `all` or a comma list of
    /// label names, optionally including `undetermined`; when a list is given
    /// undetermined comments are shown only if listed.
    pub fn from_params(
        min_likes: Option<&str>,
        min_replies: Option<&str>,
        labels: Option<&str>,
    ) -> Result<Self, FilterParamError> {
        let mut f = FilterSpec::default();
        let count = |field: &'static str, v: &str| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| FilterParamError { field, message: format!("expected a non-negative integer, got `{v}`") })
        };
        if let Some(v) = min_likes {
            f.min_likes = count("min_likes", v)?;
        }
        if let Some(v) = min_replies {
            f.min_replies = count("min_replies", v)?;
        }
        if let Some(v) = labels {
            if !v.trim().eq_ignore_ascii_case("all") {
                f.visible_labels.clear();
                f.show_undetermined = false;
                for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    if part.eq_ignore_ascii_case(undetermined::UNDETERMINED) {
                        f.show_undetermined = true;
                    } else {
                        let l = part
                            .parse::<SemanticLabel>()
                            .map_err(|e| FilterParamError { field: "labels", message: e.to_string() })?;
                        f.visible_labels.insert(l);
                    }
                }
            }
        }
        Ok(f)
    }
}

/// The document restricted to comments passing `filter`. Groups left empty
/// are dropped; top comments and pies are recomputed; highlights are kept.
pub fn apply_filters(doc: &AnnotatedDocument, filter: &FilterSpec) -> AnnotatedDocument {
    let mut view = AnnotatedDocument {
        article: doc.article.clone(),
        comments: doc.comments.iter().filter(|c| filter.visible(c)).cloned().collect(),
        sentence_groups: BTreeMap::new(),
        paragraph_groups: BTreeMap::new(),
        global_comments: Vec::new(),
        undetermined: Vec::new(),
        top_comment: BTreeMap::new(),
        pie_data: BTreeMap::new(),
        keyword_highlights: doc.keyword_highlights.clone(),
        highlight_min_comments: doc.highlight_min_comments,
    };
    regroup(&mut view);
    view
}

impl AnnotatedDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize") + "\n"
    }

    pub fn from_json(json: &str) -> serde_json::Result<Self> {
        serde_json::from_str(json)
    }

    pub fn id(&self) -> &str {
        &self.article.id
    }

    /// Number of comments visible in any group or the undetermined list.
    pub fn visible_count(&self) -> usize {
        self.comments.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tokenizer;

    fn article() -> SegmentedArticle {
        SegmentedArticle::with_language("a", "T", "Court ruled fast. Appeal followed.\n\nMoney was paid.", Language::En)
            .unwrap()
    }

    fn classified(id: &str, semantic: Option<SemanticLabel>, location: Option<Anchor>) -> ClassifiedComment {
        ClassifiedComment {
            id: id.into(),
            semantic,
            location,
            semantic_confidence: None,
            location_confidence: None,
            semantic_provenance: Provenance::RuleOnly,
            location_provenance: Provenance::RuleOnly,
            semantic_candidates: vec![],
            location_candidates: vec![],
            semantic_steps: vec![],
            location_steps: vec![],
            warnings: vec![],
            latency: Default::default(),
        }
    }

    fn comment(id: &str, text: &str, likes: u64, replies: u64) -> Comment {
        Comment::new(id, text, likes, replies, &Tokenizer::for_language(Language::En))
    }

    #[test]
    fn top_comment_tie_break_and_pie() {
        let a = article();
        let cs = [comment("c9", "x", 5, 0), comment("c2", "y", 9, 0), comment("c7", "z", 9, 0)];
        let k = [
            classified("c9", Some(SemanticLabel::Statement), Some(Anchor::sentences([1]))),
            classified("c2", Some(SemanticLabel::Statement), Some(Anchor::sentences([1]))),
            classified("c7", Some(SemanticLabel::Question), Some(Anchor::sentences([1]))),
        ];
        let doc = assemble_document(&a, &k, &cs, 3);
        assert_eq!(doc.top_comment[&1], "c2");
        let ids: Vec<&str> = doc.sentence_groups[&1].iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["c2", "c7", "c9"]);
        assert_eq!(doc.pie_data[&1], BTreeMap::from([(SemanticLabel::Statement, 2), (SemanticLabel::Question, 1)]));
    }

    #[test]
    fn groups_partition_comments() {
        let a = article();
        let cs = [comment("a", "x", 1, 0), comment("b", "x", 2, 0), comment("c", "x", 3, 0), comment("d", "x", 0, 0)];
        let k = [
            classified("a", None, Some(Anchor::global())),
            classified("b", None, Some(Anchor::paragraphs([2]))),
            classified("c", Some(SemanticLabel::Sarcasm), None),
            classified("d", None, Some(Anchor::sentences([2]))),
        ];
        let doc = assemble_document(&a, &k, &cs, 3);
        assert_eq!(doc.global_comments.len(), 1);
        assert_eq!(doc.paragraph_groups[&2].len(), 1);
        assert_eq!(doc.undetermined, vec!["c".to_string()]);
        assert!(doc.pie_data[&2].is_empty());
    }

    #[test]
    fn highlights_count_distinct_comments() {
        let a = article();
        let cs = [
            comment("a", "the appeal appeal appeal", 0, 0),
            comment("b", "appeal and money", 0, 0),
            comment("c", "an appeal", 0, 0),
            comment("d", "money", 0, 0),
        ];
        let h = keyword_highlights(&a, &cs, 3);
        assert_eq!(h.len(), 1);
        assert_eq!((h[0].sentence, h[0].text.as_str(), h[0].start, h[0].end, h[0].comment_count), (2, "appeal", 0, 6, 3));
        assert_eq!(keyword_highlights(&a, &cs, 2).len(), 2);
    }

    #[test]
    fn filters() {
        let a = article();
        let cs = [comment("a", "x", 10, 1), comment("b", "y", 60, 6), comment("c", "z", 70, 2)];
        let k = [
            classified("a", Some(SemanticLabel::Question), Some(Anchor::sentences([1]))),
            classified("b", None, Some(Anchor::sentences([1]))),
            classified("c", Some(SemanticLabel::Sarcasm), Some(Anchor::sentences([1]))),
        ];
        let doc = assemble_document(&a, &k, &cs, 3);
        assert_eq!(apply_filters(&doc, &FilterSpec::default()), doc);
        let f = FilterSpec::from_params(Some("50"), Some("5"), None).unwrap();
        assert_eq!(apply_filters(&doc, &f).sentence_groups[&1].len(), 1);
        let f = FilterSpec::from_params(Some("71"), None, None).unwrap();
        assert!(apply_filters(&doc, &f).sentence_groups.is_empty());
        let f = FilterSpec::from_params(None, None, Some("question,sarcasm")).unwrap();
        let v = apply_filters(&doc, &f);
        assert_eq!(v.top_comment[&1], "c");
        assert!(v.comments.iter().all(|c| matches!(c.semantic, Some(SemanticLabel::Question | SemanticLabel::Sarcasm))));
        let f = FilterSpec::from_params(None, None, Some("undetermined")).unwrap();
        assert_eq!(apply_filters(&doc, &f).comments.len(), 1);
    }

    #[test]
    fn bad_params_name_the_field() {
        assert_eq!(FilterSpec::from_params(Some("-1"), None, None).unwrap_err().field, "min_likes");
        assert_eq!(FilterSpec::from_params(None, Some("x"), None).unwrap_err().field, "min_replies");
        assert_eq!(FilterSpec::from_params(None, None, Some("rant")).unwrap_err().field, "labels");
    }

    #[test]
    fn json_round_trip() {
        let a = article();
        let cs = [comment("a", "x", 1, 0)];
        let doc = assemble_document(&a, &[classified("a", None, Some(Anchor::sentences([1])))], &cs, 3);
        let json = doc.to_json();
        assert!(json.contains("\"semantic\": \"undetermined\""));
        assert_eq!(AnnotatedDocument::from_json(&json).unwrap(), doc);
    }
}
