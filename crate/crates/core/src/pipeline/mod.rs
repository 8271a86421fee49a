//! End-to-end classification of comments on both axes.
//!
//! Hybrid: rule candidates are verified by the judge; one candidate gets a
//! yes/no check, several get a constrained choice, and a rejected, low
//! confidence or unparseable verification escalates to full inference (the
//! whole article in the prompt). Comments without rule candidates go to full
//! inference directly. Rule-only keeps a sole rule candidate and leaves
//! everything else undetermined. LLM-only skips the rules.

pub mod document;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Comment, SegmentedArticle};
use crate::judge::{Judge, JudgeError, JudgeResult, PromptKind};
use crate::labels::{undetermined, Anchor, SemanticLabel};
use crate::location_rules::{classify_rules_location, Entity, IndicatorTable, LocationContext};
use crate::semantic_rules::{classify_rules_semantic, CueTable};
use crate::similarity::{EmbedError, EmbeddingProvider};
pub use document::{apply_filters, assemble_document, AnnotatedComment, AnnotatedDocument, FilterSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    RuleOnly,
    LlmOnly,
    Hybrid,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::RuleOnly, Strategy::LlmOnly, Strategy::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::RuleOnly => "rule-only",
            Strategy::LlmOnly => "llm-only",
            Strategy::Hybrid => "hybrid",
        }
    }

    pub fn uses_judge(self) -> bool {
        self != Strategy::RuleOnly
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy `{0}` (expected rule-only, llm-only or hybrid)")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Strategy::ALL.into_iter().find(|x| x.as_str() == norm).ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

/// How a label was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Decided by the rules alone.
    RuleOnly,
    /// A rule candidate confirmed by the judge.
    RuleVerified,
    /// Full inference by the judge.
    LlmInferred,
    /// The judge could not be reached.
    LlmUnavailable,
}

/// One judge call and what came of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeStep {
    pub kind: PromptKind,
    pub outcome: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub semantic_seconds: f64,
    pub location_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedComment {
    pub id: String,
    #[serde(with = "undetermined")]
    pub semantic: Option<SemanticLabel>,
    #[serde(with = "undetermined")]
    pub location: Option<Anchor>,
    pub semantic_confidence: Option<f64>,
    pub location_confidence: Option<f64>,
    pub semantic_provenance: Provenance,
    pub location_provenance: Provenance,
    pub semantic_candidates: Vec<SemanticLabel>,
    pub location_candidates: Vec<Anchor>,
    pub semantic_steps: Vec<JudgeStep>,
    pub location_steps: Vec<JudgeStep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub latency: Latency,
}

impl ClassifiedComment {
    /// A copy with timing zeroed, for comparisons across runs.
    pub fn without_timing(&self) -> Self {
        ClassifiedComment { latency: Latency::default(), ..self.clone() }
    }
}

/// Outcome of one classification axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisOutcome<T> {
    pub label: Option<T>,
    pub confidence: Option<f64>,
    pub provenance: Provenance,
    pub candidates: Vec<T>,
    pub steps: Vec<JudgeStep>,
    pub warnings: Vec<String>,
    pub seconds: f64,
}

impl<T> AxisOutcome<T> {
    fn rule(label: Option<T>, candidates: Vec<T>, warnings: Vec<String>) -> Self {
        AxisOutcome {
            label,
            confidence: None,
            provenance: Provenance::RuleOnly,
            candidates,
            steps: Vec::new(),
            warnings,
            seconds: 0.0,
        }
    }
}

fn step_of<T: fmt::Display>(kind: PromptKind, r: &Result<JudgeResult<T>, JudgeError>) -> JudgeStep {
    let outcome = match r {
        Ok(JudgeResult { label: Some(l), confidence, .. }) => format!("{l} ({confidence:.2})"),
        Ok(JudgeResult { confidence, .. }) => format!("undetermined ({confidence:.2})"),
        Err(JudgeError::Parse { message, .. }) => format!("parse failure: {message}"),
        Err(JudgeError::Transport(m)) => format!("unavailable: {m}"),
    };
    JudgeStep { kind, outcome }
}

/// Runs an optional verification step and the full-inference fallback.
fn judged<T: fmt::Display + Clone>(
    candidates: Vec<T>,
    warnings: Vec<String>,
    verify: Option<(PromptKind, &dyn Fn() -> Result<JudgeResult<T>, JudgeError>)>,
    infer: (PromptKind, &dyn Fn() -> Result<JudgeResult<T>, JudgeError>),
) -> AxisOutcome<T> {
    let mut steps = Vec::new();
    let mut out = AxisOutcome {
        label: None,
        confidence: None,
        provenance: Provenance::LlmInferred,
        candidates,
        steps: Vec::new(),
        warnings,
        seconds: 0.0,
    };
    if let Some((kind, verify)) = verify {
        let r = verify();
        steps.push(step_of(kind, &r));
        match r {
            Ok(JudgeResult { label: Some(l), confidence, .. }) => {
                out.label = Some(l);
                out.confidence = Some(confidence);
                out.provenance = Provenance::RuleVerified;
                out.steps = steps;
                return out;
            }
            Err(JudgeError::Transport(_)) => {
                out.provenance = Provenance::LlmUnavailable;
                out.steps = steps;
                return out;
            }
            _ => {}
        }
    }
    let (kind, infer) = infer;
    let r = infer();
    steps.push(step_of(kind, &r));
    match r {
        Ok(result) => {
            out.confidence = Some(result.confidence);
            out.label = result.label;
        }
        Err(JudgeError::Transport(_)) => {
            out.provenance = Provenance::LlmUnavailable;
            out.confidence = Some(0.0);
        }
        Err(JudgeError::Parse { .. }) => out.confidence = Some(0.0),
    }
    out.steps = steps;
    out
}

pub fn classify_semantic_hybrid(
    comment: &Comment,
    article: &SegmentedArticle,
    cues: &CueTable,
    provider: &dyn EmbeddingProvider,
    judge: Option<&Judge>,
    strategy: Strategy,
) -> AxisOutcome<SemanticLabel> {
    let start = Instant::now();
    let mut out = match (strategy, judge) {
        (Strategy::LlmOnly, Some(judge)) => judged(
            Vec::new(),
            Vec::new(),
            None,
            (PromptKind::FullInfer, &|| judge.infer_semantic_full(comment, article)),
        ),
        (Strategy::RuleOnly, _) | (_, None) => {
            let c = classify_rules_semantic(comment, cues, provider);
            let labels: Vec<SemanticLabel> = c.labels().into_iter().collect();
            let sole = (labels.len() == 1).then(|| labels[0]);
            AxisOutcome::rule(sole, labels, c.warnings)
        }
        (Strategy::Hybrid, Some(judge)) => {
            let c = classify_rules_semantic(comment, cues, provider);
            let set: BTreeSet<SemanticLabel> = c.labels();
            let labels: Vec<SemanticLabel> = set.iter().copied().collect();
            let single = || judge.verify_semantic_single(comment, labels[0]);
            let select = || judge.select_semantic_best(comment, &set);
            let verify: Option<(PromptKind, &dyn Fn() -> _)> = match labels.len() {
                0 => None,
                1 => Some((PromptKind::VerifySingle, &single)),
                _ => Some((PromptKind::SelectBest, &select)),
            };
            judged(
                labels.clone(),
                c.warnings,
                verify,
                (PromptKind::FullInfer, &|| judge.infer_semantic_full(comment, article)),
            )
        }
    };
    out.seconds = start.elapsed().as_secs_f64();
    out
}

pub fn classify_location_hybrid(
    comment: &Comment,
    ctx: &LocationContext,
    judge: Option<&Judge>,
    strategy: Strategy,
) -> AxisOutcome<Anchor> {
    let start = Instant::now();
    let article = ctx.article;
    let mut out = match (strategy, judge) {
        (Strategy::LlmOnly, Some(judge)) => judged(
            Vec::new(),
            Vec::new(),
            None,
            (PromptKind::GlobalSearch, &|| judge.infer_location_global(comment, article)),
        ),
        (Strategy::RuleOnly, _) | (_, None) => {
            let c = classify_rules_location(comment, ctx);
            AxisOutcome::rule(c.sole_anchor(), c.anchors(), c.warnings)
        }
        (Strategy::Hybrid, Some(judge)) => {
            let c = classify_rules_location(comment, ctx);
            let anchors = c.anchors();
            let verify_fn = || judge.verify_location(comment, &anchors, article);
            let verify: Option<(PromptKind, &dyn Fn() -> _)> =
                (!anchors.is_empty()).then_some((PromptKind::VerifyAnchor, &verify_fn as &dyn Fn() -> _));
            judged(
                anchors.clone(),
                c.warnings,
                verify,
                (PromptKind::GlobalSearch, &|| judge.infer_location_global(comment, article)),
            )
        }
    };
    out.seconds = start.elapsed().as_secs_f64();
    out
}

pub const DEFAULT_WORKERS: usize = 4;

/// Everything a pipeline run needs besides the comments.
pub struct Pipeline {
    pub cues: CueTable,
    pub indicators: IndicatorTable,
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub judge: Option<Judge>,
    pub entities: Vec<Entity>,
    pub workers: usize,
}

impl Pipeline {
    /// Bundled tables, the given embedder, no judge, no entities.
    pub fn new(embedder: Arc<dyn EmbeddingProvider>) -> Self {
        Pipeline {
            cues: CueTable::default(),
            indicators: IndicatorTable::default(),
            embedder,
            judge: None,
            entities: Vec::new(),
            workers: DEFAULT_WORKERS,
        }
    }

    pub fn with_judge(mut self, judge: Judge) -> Self {
        self.judge = Some(judge);
        self
    }

    pub fn with_entities(mut self, entities: Vec<Entity>) -> Self {
        self.entities = entities;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn classify_comment(&self, comment: &Comment, ctx: &LocationContext, strategy: Strategy) -> ClassifiedComment {
        let judge = if strategy.uses_judge() { self.judge.as_ref() } else { None };
        let sem = classify_semantic_hybrid(comment, ctx.article, &self.cues, &*self.embedder, judge, strategy);
        let loc = classify_location_hybrid(comment, ctx, judge, strategy);
        let mut warnings = sem.warnings;
        warnings.extend(loc.warnings);
        ClassifiedComment {
            id: comment.id.clone(),
            semantic: sem.label,
            location: loc.label,
            semantic_confidence: sem.confidence,
            location_confidence: loc.confidence,
            semantic_provenance: sem.provenance,
            location_provenance: loc.provenance,
            semantic_candidates: sem.candidates,
            location_candidates: loc.candidates,
            semantic_steps: sem.steps,
            location_steps: loc.steps,
            warnings,
            latency: Latency { semantic_seconds: sem.seconds, location_seconds: loc.seconds },
        }
    }

    /// Classifies every comment, in input order, on up to `workers` threads.
    pub fn run(
        &self,
        article: &SegmentedArticle,
        comments: &[Comment],
        strategy: Strategy,
    ) -> Result<Vec<ClassifiedComment>, EmbedError> {
        if strategy.uses_judge() && self.judge.is_none() {
            tracing::warn!(%strategy, "no judge configured; falling back to rule results");
        }
        let ctx = LocationContext::new(article, &self.indicators, &*self.embedder, self.entities.clone())?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .expect("thread pool builds");
        Ok(pool.install(|| comments.par_iter().map(|c| self.classify_comment(c, &ctx, strategy)).collect()))
    }
}

/// Free-function form of [`Pipeline::run`].
pub fn run_pipeline(
    article: &SegmentedArticle,
    comments: &[Comment],
    pipeline: &Pipeline,
    strategy: Strategy,
) -> Result<Vec<ClassifiedComment>, EmbedError> {
    pipeline.run(article, comments, strategy)
}
