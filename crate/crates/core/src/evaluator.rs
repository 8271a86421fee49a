//! Scoring classified comments against gold labels.
//!
//! Undetermined predictions count as wrong in the accuracies, so accuracy
//! and coverage are independent axes. A location is correct only when both
//! the level and the full index set match; partial overlaps are errors.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Comment, GoldLabel};
use crate::labels::{Anchor, LocationLevel, SemanticLabel};
use crate::pipeline::{ClassifiedComment, Strategy};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("prediction/gold id mismatch: {0}")]
    IdMismatch(String),
    #[error("comment `{0}` has no gold label")]
    MissingGold(String),
    #[error("nothing to evaluate")]
    Empty,
}

/// A gold label paired with a prediction for the same comment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored<'a> {
    pub id: &'a str,
    pub gold: &'a GoldLabel,
    pub predicted: &'a ClassifiedComment,
}

/// Pairs predictions with gold labels by id. Both sides must hold the same
/// ids, each once; order does not matter.
pub fn align<'a>(preds: &'a [ClassifiedComment], comments: &'a [Comment]) -> Result<Vec<Scored<'a>>, EvalError> {
    if preds.len() != comments.len() {
        return Err(EvalError::IdMismatch(format!("{} predictions for {} comments", preds.len(), comments.len())));
    }
    let mut by_id: HashMap<&str, &ClassifiedComment> = HashMap::new();
    for p in preds {
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(EvalError::IdMismatch(format!("duplicate prediction `{}`", p.id)));
        }
    }
    comments
        .iter()
        .map(|c| {
            let gold = c.gold.as_ref().ok_or_else(|| EvalError::MissingGold(c.id.clone()))?;
            let predicted =
                by_id.get(c.id.as_str()).ok_or_else(|| EvalError::IdMismatch(format!("no prediction for `{}`", c.id)))?;
            Ok(Scored { id: &c.id, gold, predicted })
        })
        .collect()
}

pub fn semantic_correct(predicted: Option<SemanticLabel>, gold: SemanticLabel) -> bool {
    predicted == Some(gold)
}

pub fn location_correct(predicted: Option<&Anchor>, gold: &Anchor) -> bool {
    match predicted {
        None => false,
        Some(p) if p.level != gold.level => false,
        Some(p) => p.level == LocationLevel::Global || p.indices == gold.indices,
    }
}

fn ratio(n: usize, d: usize) -> Result<f64, EvalError> {
    if d == 0 {
        return Err(EvalError::Empty);
    }
    Ok(n as f64 / d as f64)
}

pub fn semantic_accuracy(scored: &[Scored]) -> Result<f64, EvalError> {
    ratio(scored.iter().filter(|s| semantic_correct(s.predicted.semantic, s.gold.semantic)).count(), scored.len())
}

pub fn exact_localization_accuracy(scored: &[Scored]) -> Result<f64, EvalError> {
    ratio(
        scored.iter().filter(|s| location_correct(s.predicted.location.as_ref(), &s.gold.anchor())).count(),
        scored.len(),
    )
}

/// Percent of predictions that are not undetermined on the given axis.
pub fn coverage_rate(preds: &[ClassifiedComment], axis: Axis) -> Result<f64, EvalError> {
    let determined = preds
        .iter()
        .filter(|p| match axis {
            Axis::Semantic => p.semantic.is_some(),
            Axis::Location => p.location.is_some(),
        })
        .count();
    ratio(100 * determined, preds.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Semantic,
    Location,
}

/// Predicted label name, `undetermined` for none.
fn predicted_name(p: Option<SemanticLabel>) -> String {
    p.map_or_else(|| "undetermined".to_string(), |l| l.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strategy: Strategy,
    pub n: usize,
    pub semantic_accuracy: f64,
    pub exact_localization_accuracy: f64,
    pub semantic_coverage: f64,
    pub location_coverage: f64,
    pub avg_time_semantic: f64,
    pub avg_time_location: f64,
    /// Whether the judge answers were replayed, making times meaningless.
    pub replayed: bool,
    /// gold label -> predicted label (or `undetermined`) -> count.
    pub confusion: BTreeMap<SemanticLabel, BTreeMap<String, usize>>,
}

impl EvalReport {
    pub fn compute(
        strategy: Strategy,
        preds: &[ClassifiedComment],
        comments: &[Comment],
        replayed: bool,
    ) -> Result<Self, EvalError> {
        let scored = align(preds, comments)?;
        let n = scored.len();
        let mut confusion: BTreeMap<SemanticLabel, BTreeMap<String, usize>> = BTreeMap::new();
        for s in &scored {
            *confusion.entry(s.gold.semantic).or_default().entry(predicted_name(s.predicted.semantic)).or_default() += 1;
        }
        let mean = |f: fn(&ClassifiedComment) -> f64| preds.iter().map(f).sum::<f64>() / n as f64;
        Ok(EvalReport {
            strategy,
            n,
            semantic_accuracy: semantic_accuracy(&scored)?,
            exact_localization_accuracy: exact_localization_accuracy(&scored)?,
            semantic_coverage: coverage_rate(preds, Axis::Semantic)?,
            location_coverage: coverage_rate(preds, Axis::Location)?,
            avg_time_semantic: mean(|p| p.latency.semantic_seconds),
            avg_time_location: mean(|p| p.latency.location_seconds),
            replayed,
            confusion,
        })
    }

    /// The report with timing zeroed, for run-to-run comparisons.
    pub fn without_timing(&self) -> Self {
        EvalReport { avg_time_semantic: 0.0, avg_time_location: 0.0, ..self.clone() }
    }
}

fn time_cell(r: &EvalReport, seconds: f64) -> String {
    if r.replayed && r.strategy.uses_judge() {
        format!("{seconds:.4} (replay)")
    } else {
        format!("{seconds:.4}")
    }
}

/// Aligned plain-text table: one row per strategy.
pub fn render_text(reports: &[EvalReport]) -> String {
    let header = [
        "Strategy",
        "n",
        "Sem. accuracy",
        "Sem. coverage (%)",
        "Sem. time (s/comment)",
        "Loc. accuracy",
        "Loc. coverage (%)",
        "Loc. time (s/comment)",
    ];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.strategy.to_string(),
                r.n.to_string(),
                format!("{:.4}", r.semantic_accuracy),
                format!("{:.1}", r.semantic_coverage),
                time_cell(r, r.avg_time_semantic),
                format!("{:.4}", r.exact_localization_accuracy),
                format!("{:.1}", r.location_coverage),
                time_cell(r, r.avg_time_location),
            ]
        })
        .collect();
    let widths: Vec<usize> =
        (0..header.len()).map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0)).collect();
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out += &line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for r in &rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    if reports.iter().any(|r| r.replayed && r.strategy.uses_judge()) {
        out += "\nJudge answers were replayed from a transcript; times of judge-backed strategies are not meaningful.\n";
    }
    out
}

pub fn render_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(
        "strategy,n,semantic_accuracy,semantic_coverage,avg_time_semantic,exact_localization_accuracy,location_coverage,avg_time_location,replayed\n",
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.strategy,
            r.n,
            r.semantic_accuracy,
            r.semantic_coverage,
            r.avg_time_semantic,
            r.exact_localization_accuracy,
            r.location_coverage,
            r.avg_time_location,
            r.replayed
        );
    }
    out
}

/// Long-format confusion matrix over all reports.
pub fn render_confusion_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("strategy,gold,predicted,count\n");
    for r in reports {
        for (gold, row) in &r.confusion {
            for (pred, n) in row {
                let _ = writeln!(out, "{},{gold},{pred},{n}", r.strategy);
            }
        }
    }
    out
}

/// Runs every strategy and scores it.
pub fn compare_strategies(
    pipeline: &crate::pipeline::Pipeline,
    article: &crate::corpus::SegmentedArticle,
    comments: &[Comment],
    replayed: bool,
) -> Result<Vec<EvalReport>, CompareError> {
    if let Some(c) = comments.iter().find(|c| c.gold.is_none()) {
        return Err(EvalError::MissingGold(c.id.clone()).into());
    }
    Strategy::ALL
        .iter()
        .map(|&s| {
            let preds = pipeline.run(article, comments, s)?;
            Ok(EvalReport::compute(s, &preds, comments, replayed)?)
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Embed(#[from] crate::similarity::EmbedError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Language, Tokenizer};
    use crate::pipeline::Provenance;

    fn pred(id: &str, s: Option<SemanticLabel>, l: Option<Anchor>) -> ClassifiedComment {
        ClassifiedComment {
            id: id.into(),
            semantic: s,
            location: l,
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

    fn gold(id: &str, s: SemanticLabel, a: Anchor) -> Comment {
        Comment::new(id, "t", 0, 0, &Tokenizer::for_language(Language::En)).with_gold(GoldLabel {
            semantic: s,
            level: a.level,
            indices: a.indices,
        })
    }

    #[test]
    fn exact_match_semantics() {
        let g = Anchor::sentences([3, 5]);
        assert!(location_correct(Some(&Anchor::sentences([5, 3])), &g));
        assert!(!location_correct(Some(&Anchor::sentences([3])), &g));
        assert!(!location_correct(Some(&Anchor::paragraphs([3, 5])), &g));
        assert!(!location_correct(None, &g));
        assert!(location_correct(Some(&Anchor::global()), &Anchor::global()));
    }

    #[test]
    fn accuracy_and_coverage() {
        use SemanticLabel::*;
        let comments: Vec<Comment> =
            (0..10).map(|i| gold(&format!("c{i}"), Question, Anchor::sentences([1]))).collect();
        let preds: Vec<ClassifiedComment> = (0..10)
            .map(|i| pred(&format!("c{i}"), Some(if i == 0 { Statement } else { Question }), None))
            .collect();
        let scored = align(&preds, &comments).unwrap();
        assert_eq!(semantic_accuracy(&scored).unwrap(), 0.9);
        assert_eq!(exact_localization_accuracy(&scored).unwrap(), 0.0);
        assert_eq!(coverage_rate(&preds, Axis::Location).unwrap(), 0.0);
        assert_eq!(coverage_rate(&preds, Axis::Semantic).unwrap(), 100.0);
        let half: Vec<ClassifiedComment> =
            (0..4).map(|i| pred(&format!("c{i}"), (i < 2).then_some(Question), None)).collect();
        assert_eq!(coverage_rate(&half, Axis::Semantic).unwrap(), 50.0);
        assert_eq!(coverage_rate(&[], Axis::Semantic), Err(EvalError::Empty));
    }

    #[test]
    fn id_mismatch_detected() {
        let comments = [gold("a", SemanticLabel::Question, Anchor::global())];
        assert!(matches!(align(&[pred("b", None, None)], &comments), Err(EvalError::IdMismatch(_))));
        assert!(matches!(align(&[], &comments), Err(EvalError::IdMismatch(_))));
    }

    #[test]
    fn single_comment_report_renders() {
        let comments = [gold("a", SemanticLabel::Question, Anchor::global())];
        let r = EvalReport::compute(Strategy::RuleOnly, &[pred("a", None, Some(Anchor::global()))], &comments, false)
            .unwrap();
        assert_eq!(r.n, 1);
        assert_eq!(r.exact_localization_accuracy, 1.0);
        assert_eq!(r.confusion[&SemanticLabel::Question]["undetermined"], 1);
        let text = render_text(std::slice::from_ref(&r));
        assert!(text.lines().count() == 3 && text.contains("rule-only"));
        assert_eq!(render_csv(std::slice::from_ref(&r)).lines().count(), 2);
        assert_eq!(render_confusion_csv(&[r]).lines().nth(1).unwrap(), "rule-only,question,undetermined,1");
    }
}
