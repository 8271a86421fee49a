//! LLM judgment: verifying rule candidates, full inference, entity extraction.
//!
//! Every call demands a strict JSON answer. Unparseable or invalid answers
//! are retried `parse_retries` times with the same prompt; a replay
//! transcript can therefore script a bad answer followed by a good one.

pub mod prompts;
pub mod provider;
pub mod replay;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Comment, SegmentedArticle};
use crate::labels::{Anchor, LocationLevel, SemanticLabel};
pub use prompts::{PromptTemplates, TemplateName};
pub use provider::{ChatError, ChatProvider, ChatRequest, PromptKind, RecordingProvider, UnavailableProvider};
pub use replay::ReplayProvider;

pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.5;
pub const DEFAULT_PARSE_RETRIES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgeConfig {
    pub confidence_threshold: f64,
    pub parse_retries: usize,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig { confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD, parse_retries: DEFAULT_PARSE_RETRIES }
    }
}

/// A judge answer. `label` is `None` for undetermined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeResult<T> {
    pub label: Option<T>,
    pub confidence: f64,
    pub raw_response: String,
    pub prompt_kind: PromptKind,
}

impl<T> JudgeResult<T> {
    /// Applies the confidence threshold: a label below it becomes undetermined.
    pub fn new(label: Option<T>, confidence: f64, raw_response: String, prompt_kind: PromptKind, threshold: f64) -> Self {
        assert!((0.0..=1.0).contains(&confidence), "confidence {confidence} outside [0,1]");
        let label = label.filter(|_| confidence >= threshold);
        JudgeResult { label, confidence, raw_response, prompt_kind }
    }

    pub fn is_undetermined(&self) -> bool {
        self.label.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JudgeError {
    #[error("llm unavailable: {0}")]
    Transport(String),
    #[error("unusable {kind:?} response after retries: {message}")]
    Parse { kind: PromptKind, message: String, raw: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Person,
    Location,
    Organization,
    Event,
    Temporal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedEntity {
    pub surface: String,
    pub kind: EntityKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityExtraction {
    pub entities: Vec<ExtractedEntity>,
    pub warnings: Vec<String>,
}

/// One unit a location candidate can be verified as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CandidateUnit {
    pub level: LocationLevel,
    pub index: Option<usize>,
}

/// Splits anchors into (level, index) units; a global anchor is one unit.
pub fn candidate_units(anchors: &[Anchor]) -> Vec<CandidateUnit> {
    let mut units = BTreeSet::new();
    for a in anchors {
        if a.level == LocationLevel::Global {
            units.insert(CandidateUnit { level: a.level, index: None });
        } else {
            for &i in &a.indices {
                units.insert(CandidateUnit { level: a.level, index: Some(i) });
            }
        }
    }
    units.into_iter().collect()
}

#[derive(Deserialize)]
struct MatchAnswer {
    #[serde(rename = "match")]
    matched: bool,
    confidence: f64,
}

#[derive(Deserialize)]
struct LabelAnswer {
    label: String,
    confidence: f64,
}

#[derive(Deserialize)]
struct AnchorAnswer {
    level: String,
    #[serde(default)]
    indices: Vec<usize>,
    confidence: f64,
}

#[derive(Deserialize)]
struct EntityAnswer {
    entities: Vec<RawEntity>,
}

#[derive(Deserialize)]
struct RawEntity {
    surface: String,
    kind: String,
}

/// Parses the outermost JSON object in `text`, tolerating surrounding prose
/// or code fences.
fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, String> {
    let start = text.find('{').ok_or("no JSON object in response")?;
    let end = text.rfind('}').ok_or("no JSON object in response")?;
    if end < start {
        return Err("no JSON object in response".into());
    }
    serde_json::from_str(&text[start..=end]).map_err(|e| e.to_string())
}

fn check_confidence(c: f64) -> Result<f64, String> {
    if c.is_finite() && (0.0..=1.0).contains(&c) {
        Ok(c)
    } else {
        Err(format!("confidence {c} outside [0,1]"))
    }
}

pub struct Judge {
    provider: Arc<dyn ChatProvider>,
    templates: PromptTemplates,
    config: JudgeConfig,
}

impl Judge {
    pub fn new(provider: Arc<dyn ChatProvider>) -> Self {
        Judge { provider, templates: PromptTemplates::default(), config: JudgeConfig::default() }
    }

    pub fn with_config(mut self, config: JudgeConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_templates(mut self, templates: PromptTemplates) -> Self {
        self.templates = templates;
        self
    }

    pub fn config(&self) -> &JudgeConfig {
        &self.config
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    /// Sends `prompt` and runs `parse` on the answer, retrying on parse errors.
    fn ask<T>(
        &self,
        template: TemplateName,
        prompt: String,
        parse: impl Fn(&str) -> Result<(Option<T>, f64), String>,
    ) -> Result<JudgeResult<T>, JudgeError> {
        let kind = template.kind();
        let request = ChatRequest { kind, prompt };
        let mut failure = None;
        for attempt in 0..=self.config.parse_retries {
            let raw = self.provider.complete(&request).map_err(|e| JudgeError::Transport(e.to_string()))?;
            match parse(&raw) {
                Ok((label, confidence)) => {
                    return Ok(JudgeResult::new(label, confidence, raw, kind, self.config.confidence_threshold));
                }
                Err(message) => {
                    tracing::debug!(?kind, attempt, %message, "judge response rejected");
                    failure = Some(JudgeError::Parse { kind, message, raw });
                }
            }
        }
        Err(failure.expect("at least one attempt"))
    }

    pub fn verify_semantic_single(&self, comment: &Comment, candidate: SemanticLabel) -> Result<JudgeResult<SemanticLabel>, JudgeError> {
        let t = TemplateName::VerifySemanticSingle;
        let prompt = self.templates.render(t, &[("comment", &comment.text), ("candidates", candidate.as_str())]);
        self.ask(t, prompt, |raw| {
            let a: MatchAnswer = parse_json(raw)?;
            Ok((a.matched.then_some(candidate), check_confidence(a.confidence)?))
        })
    }

    pub fn select_semantic_best(
        &self,
        comment: &Comment,
        candidates: &BTreeSet<SemanticLabel>,
    ) -> Result<JudgeResult<SemanticLabel>, JudgeError> {
        let t = TemplateName::SelectSemanticBest;
        let list: Vec<&str> = candidates.iter().map(|l| l.as_str()).collect();
        let prompt = self.templates.render(t, &[("comment", &comment.text), ("candidates", &list.join(", "))]);
        self.ask(t, prompt, |raw| {
            let a: LabelAnswer = parse_json(raw)?;
            let label: SemanticLabel = a.label.parse().map_err(|e| format!("{e}"))?;
            if !candidates.contains(&label) {
                return Err(format!("label {label} is not a candidate"));
            }
            Ok((Some(label), check_confidence(a.confidence)?))
        })
    }

    pub fn infer_semantic_full(&self, comment: &Comment, article: &SegmentedArticle) -> Result<JudgeResult<SemanticLabel>, JudgeError> {
        let t = TemplateName::InferSemanticFull;
        let prompt = self.templates.render(t, &[("comment", &comment.text), ("article", &render_article(article))]);
        self.ask(t, prompt, |raw| {
            let a: LabelAnswer = parse_json(raw)?;
            let label: SemanticLabel = a.label.parse().map_err(|e| format!("{e}"))?;
            Ok((Some(label), check_confidence(a.confidence)?))
        })
    }

    /// Verifies rule location candidates using only their text segments.
    /// A single unit is a yes/no question; several units ask for a choice
    /// restricted to the candidates.
    pub fn verify_location(
        &self,
        comment: &Comment,
        candidates: &[Anchor],
        article: &SegmentedArticle,
    ) -> Result<JudgeResult<Anchor>, JudgeError> {
        let units = candidate_units(candidates);
        assert!(!units.is_empty(), "verify_location needs at least one candidate");
        let segments = render_segments(article, &units);
        let described: Vec<String> = units.iter().map(describe_unit).collect();
        if let [unit] = units[..] {
            let t = TemplateName::VerifyLocationSingle;
            let anchor = unit_anchor(unit);
            let prompt = self.templates.render(
                t,
                &[("comment", &comment.text), ("segments", &segments), ("candidates", &described[0])],
            );
            return self.ask(t, prompt, |raw| {
                let a: MatchAnswer = parse_json(raw)?;
                Ok((a.matched.then(|| anchor.clone()), check_confidence(a.confidence)?))
            });
        }
        let t = TemplateName::VerifyLocationSelect;
        let prompt = self.templates.render(
            t,
            &[("comment", &comment.text), ("segments", &segments), ("candidates", &described.join("; "))],
        );
        self.ask(t, prompt, |raw| {
            let a: AnchorAnswer = parse_json(raw)?;
            let anchor = parse_anchor(&a)?;
            let allowed: BTreeSet<CandidateUnit> = units.iter().copied().collect();
            let ok = if anchor.level == LocationLevel::Global {
                allowed.contains(&CandidateUnit { level: LocationLevel::Global, index: None })
            } else {
                anchor.indices.iter().all(|&i| allowed.contains(&CandidateUnit { level: anchor.level, index: Some(i) }))
            };
            if !ok {
                return Err(format!("anchor {anchor} is not among the candidates"));
            }
            Ok((Some(anchor), check_confidence(a.confidence)?))
        })
    }

    pub fn infer_location_global(&self, comment: &Comment, article: &SegmentedArticle) -> Result<JudgeResult<Anchor>, JudgeError> {
        let t = TemplateName::InferLocationGlobal;
        let prompt = self.templates.render(t, &[("comment", &comment.text), ("article", &render_article(article))]);
        self.ask(t, prompt, |raw| {
            let a: AnchorAnswer = parse_json(raw)?;
            let anchor = parse_anchor(&a)?;
            if !article.contains_anchor(&anchor) {
                return Err(format!("anchor {anchor} does not exist in the article"));
            }
            Ok((Some(anchor), check_confidence(a.confidence)?))
        })
    }

    /// Named entities in `text`. Failures yield an empty list and a warning.
    pub fn extract_entities(&self, text: &str) -> EntityExtraction {
        let t = TemplateName::ExtractEntities;
        let prompt = self.templates.render(t, &[("article", text)]);
        let request = ChatRequest { kind: t.kind(), prompt };
        let mut warnings = Vec::new();
        for _ in 0..=self.config.parse_retries {
            let raw = match self.provider.complete(&request) {
                Ok(raw) => raw,
                Err(e) => {
                    warnings.push(format!("entity extraction unavailable: {e}"));
                    return EntityExtraction { entities: Vec::new(), warnings };
                }
            };
            match parse_json::<EntityAnswer>(&raw) {
                Ok(answer) => {
                    let mut entities = Vec::new();
                    for e in answer.entities {
                        let kind = serde_json::from_value::<EntityKind>(serde_json::Value::String(e.kind.to_lowercase()));
                        match kind {
                            Ok(kind) if !e.surface.trim().is_empty() => {
                                entities.push(ExtractedEntity { surface: e.surface.trim().to_string(), kind })
                            }
                            Ok(_) => warnings.push("dropped entity with empty surface".into()),
                            Err(_) => warnings.push(format!("dropped entity `{}` of unknown kind `{}`", e.surface, e.kind)),
                        }
                    }
                    return EntityExtraction { entities, warnings };
                }
                Err(message) => warnings.push(format!("unparseable entity response: {message}")),
            }
        }
        EntityExtraction { entities: Vec::new(), warnings }
    }
}

fn parse_anchor(a: &AnchorAnswer) -> Result<Anchor, String> {
    let level: LocationLevel = a.level.parse().map_err(|e| format!("{e}"))?;
    let anchor = Anchor { level, indices: a.indices.iter().copied().collect() };
    if !anchor.is_well_formed() {
        return Err(format!("malformed anchor {anchor}"));
    }
    Ok(anchor)
}

fn unit_anchor(unit: CandidateUnit) -> Anchor {
    Anchor { level: unit.level, indices: unit.index.into_iter().collect() }
}

fn describe_unit(unit: &CandidateUnit) -> String {
    match unit.index {
        Some(i) => format!("{} {}", unit.level, i),
        None => "global".to_string(),
    }
}

/// The article with paragraph and sentence markers, as shown to the judge.
pub fn render_article(article: &SegmentedArticle) -> String {
    let mut out = String::new();
    if !article.title.is_empty() {
        let _ = writeln!(out, "Title: {}", article.title);
    }
    for p in &article.paragraphs {
        let _ = writeln!(out, "[P {}]", p.index);
        for s in &p.sentences {
            let _ = writeln!(out, "[S {}] {}", s.global_index, s.text);
        }
    }
    out
}

/// Text of the candidate units only. A global unit is represented by the
/// title and the opening sentence of each paragraph rather than the body.
pub fn render_segments(article: &SegmentedArticle, units: &[CandidateUnit]) -> String {
    let mut out = String::new();
    for unit in units {
        match (unit.level, unit.index) {
            (LocationLevel::Sentence, Some(i)) => {
                if let Some(s) = article.sentence(i) {
                    let _ = writeln!(out, "[sentence {i}] {}", s.text);
                }
            }
            (LocationLevel::Paragraph, Some(i)) => {
                if let Some(p) = article.paragraph(i) {
                    let _ = writeln!(out, "[paragraph {i}] {}", p.text());
                }
            }
            _ => {
                let openings: Vec<&str> =
                    article.paragraphs.iter().filter_map(|p| p.sentences.first()).map(|s| s.text.as_str()).collect();
                let _ = writeln!(out, "[global] {} / {}", article.title, openings.join(" / "));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tokenizer;

    fn article() -> SegmentedArticle {
        SegmentedArticle::new(
            "a",
            "Title",
            "The court ruled. Peng Yu appealed.\n\nPeople's Daily wrote an editorial. Many readers agreed.\n\nThe end came fast.",
        )
        .unwrap()
    }

    fn comment(text: &str) -> Comment {
        Comment::new("c", text, 0, 0, &Tokenizer::for_language(crate::corpus::Language::En))
    }

    /// A provider answering every request with the same scripted responses.
    struct Script(std::sync::Mutex<Vec<String>>);

    impl Script {
        fn new(responses: &[&str]) -> Arc<Self> {
            Arc::new(Script(std::sync::Mutex::new(responses.iter().rev().map(|s| s.to_string()).collect())))
        }
    }

    impl ChatProvider for Script {
        fn name(&self) -> &str {
            "script"
        }
        fn complete(&self, _r: &ChatRequest) -> Result<String, ChatError> {
            let mut v = self.0.lock().unwrap();
            if v.len() > 1 {
                Ok(v.pop().unwrap())
            } else {
                Ok(v[0].clone())
            }
        }
    }

    fn judge(responses: &[&str]) -> Judge {
        Judge::new(Script::new(responses))
    }

    #[test]
    fn verify_single_yes_and_no() {
        let c = comment("Why did he help?");
        let r = judge(&[r#"{"match":true,"confidence":0.9}"#]).verify_semantic_single(&c, SemanticLabel::Question).unwrap();
        assert_eq!(r.label, Some(SemanticLabel::Question));
        assert_eq!(r.confidence, 0.9);
        assert_eq!(r.prompt_kind, PromptKind::VerifySingle);
        let r = judge(&[r#"{"match":false,"confidence":0.9}"#]).verify_semantic_single(&c, SemanticLabel::Question).unwrap();
        assert!(r.is_undetermined());
    }

    #[test]
    fn malformed_answers_exhaust_retries() {
        let c = comment("Why?");
        let p = Arc::new(RecordingProvider::new(Script::new(&["not json"])));
        let j = Judge::new(p.clone());
        let err = j.verify_semantic_single(&c, SemanticLabel::Question).unwrap_err();
        assert!(matches!(err, JudgeError::Parse { kind: PromptKind::VerifySingle, .. }));
        assert_eq!(p.calls(), 1 + DEFAULT_PARSE_RETRIES);
    }

    #[test]
    fn retry_recovers_after_bad_answer() {
        let c = comment("Why?");
        let r = judge(&["oops", r#"```json
{"match":true,"confidence":0.7}
```"#])
        .verify_semantic_single(&c, SemanticLabel::Question)
        .unwrap();
        assert_eq!(r.label, Some(SemanticLabel::Question));
    }

    #[test]
    fn select_best_membership_and_threshold() {
        let c = comment("What a day?!");
        let set: BTreeSet<_> = [SemanticLabel::Question, SemanticLabel::Exclamation].into();
        let r = judge(&[r#"{"label":"exclamation","confidence":0.8}"#]).select_semantic_best(&c, &set).unwrap();
        assert_eq!(r.label, Some(SemanticLabel::Exclamation));
        let e = judge(&[r#"{"label":"statement","confidence":0.8}"#]).select_semantic_best(&c, &set);
        assert!(matches!(e, Err(JudgeError::Parse { .. })));
        let r = judge(&[r#"{"label":"question","confidence":0.3}"#]).select_semantic_best(&c, &set).unwrap();
        assert!(r.is_undetermined());
        assert_eq!(r.confidence, 0.3);
    }

    #[test]
    fn full_inference_and_unavailable_provider() {
        let c = comment("Great, another brilliant ruling.");
        let r = judge(&[r#"{"label":"sarcasm","confidence":0.77}"#]).infer_semantic_full(&c, &article()).unwrap();
        assert_eq!(r.label, Some(SemanticLabel::Sarcasm));
        let r = judge(&[r#"{"label":"sarcasm","confidence":0.2}"#]).infer_semantic_full(&c, &article()).unwrap();
        assert!(r.is_undetermined());
        let e = Judge::new(Arc::new(UnavailableProvider)).infer_semantic_full(&c, &article());
        assert!(matches!(e, Err(JudgeError::Transport(_))));
    }

    #[test]
    fn confidence_out_of_range_is_a_parse_failure() {
        let c = comment("Why?");
        let e = judge(&[r#"{"match":true,"confidence":1.5}"#]).verify_semantic_single(&c, SemanticLabel::Question);
        assert!(matches!(e, Err(JudgeError::Parse { .. })));
    }

    #[test]
    fn verify_location_single_and_select() {
        let a = article();
        let c = comment("He appealed, good.");
        let r = judge(&[r#"{"match":true,"confidence":0.88}"#]).verify_location(&c, &[Anchor::sentences([2])], &a).unwrap();
        assert_eq!(r.label, Some(Anchor::sentences([2])));
        let cands = [Anchor::sentences([2]), Anchor::paragraphs([2])];
        let r = judge(&[r#"{"level":"paragraph","indices":[2],"confidence":0.7}"#]).verify_location(&c, &cands, &a).unwrap();
        assert_eq!(r.label, Some(Anchor::paragraphs([2])));
        let e = judge(&[r#"{"level":"paragraph","indices":[3],"confidence":0.7}"#]).verify_location(&c, &cands, &a);
        assert!(matches!(e, Err(JudgeError::Parse { .. })));
        let r = judge(&[r#"{"match":false,"confidence":0.9}"#]).verify_location(&c, &[Anchor::sentences([2])], &a).unwrap();
        assert!(r.is_undetermined());
    }

    #[test]
    fn verify_location_prompt_excludes_unrelated_text() {
        let a = article();
        let p = Arc::new(RecordingProvider::new(Script::new(&[r#"{"match":true,"confidence":0.9}"#])));
        Judge::new(p.clone()).verify_location(&comment("ok"), &[Anchor::sentences([2])], &a).unwrap();
        let prompt = &p.log()[0].prompt;
        assert!(prompt.contains("Peng Yu appealed."));
        assert!(!prompt.contains("Many readers agreed."));
        assert!(!prompt.contains(&a.body));
    }

    #[test]
    fn global_search_validates_indices() {
        let a = article();
        let c = comment("x");
        let r = judge(&[r#"{"level":"sentence","indices":[5],"confidence":0.81}"#]).infer_location_global(&c, &a).unwrap();
        assert_eq!(r.label, Some(Anchor::sentences([5])));
        let e = judge(&[r#"{"level":"sentence","indices":[999],"confidence":0.81}"#]).infer_location_global(&c, &a);
        assert!(matches!(e, Err(JudgeError::Parse { kind: PromptKind::GlobalSearch, .. })));
        let r = judge(&[r#"{"level":"global","confidence":0.9}"#]).infer_location_global(&c, &a).unwrap();
        assert_eq!(r.label, Some(Anchor::global()));
    }

    #[test]
    fn entity_extraction_whitelist() {
        let r = judge(&[r#"{"entities":[{"surface":"People's Daily","kind":"organization"}]}"#]).extract_entities("t");
        assert_eq!(r.entities, vec![ExtractedEntity { surface: "People's Daily".into(), kind: EntityKind::Organization }]);
        assert!(judge(&[r#"{"entities":[]}"#]).extract_entities("t").entities.is_empty());
        let r = judge(&[r#"{"entities":[{"surface":"cat","kind":"animal"}]}"#]).extract_entities("t");
        assert!(r.entities.is_empty());
        assert_eq!(r.warnings.len(), 1);
        let r = judge(&["garbage"]).extract_entities("t");
        assert!(r.entities.is_empty());
        assert!(!r.warnings.is_empty());
    }

    #[test]
    #[should_panic]
    fn result_rejects_confidence_outside_unit_interval() {
        JudgeResult::new(Some(SemanticLabel::Question), 1.2, String::new(), PromptKind::FullInfer, 0.5);
    }
}
