//! Position indicator words and their resolution to article indices.

use std::collections::BTreeSet;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::labels::LocationLevel;

pub const DEFAULT_LOCATION_THRESHOLD: f64 = 0.65;
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.7;

#[derive(Debug, thiserror::Error)]
pub enum IndicatorTableError {
    #[error("failed to read indicator table {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed indicator table: {0}")]
    Malformed(String),
    #[error("invalid indicator table: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanWord {
    Beginning,
    Middle,
    Ending,
}

/// What an indicator phrase points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The number captured by `{n}` or `{ord}`.
    Numbered,
    /// The captured number counted back from the end; 1 is the last.
    NumberedFromLast,
    Nth(usize),
    FromLast(usize),
    Span(SpanWord),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorEntry {
    pub phrase: String,
    pub target: Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorTableFile {
    #[serde(default)]
    pub sentence: Vec<IndicatorEntry>,
    #[serde(default)]
    pub paragraph: Vec<IndicatorEntry>,
    #[serde(default)]
    pub global: Vec<String>,
    #[serde(default)]
    pub ambiguous: Vec<String>,
    #[serde(default = "default_location_threshold")]
    pub location_threshold: f64,
    #[serde(default = "default_overlap_threshold")]
    pub overlap_threshold: f64,
}

fn default_location_threshold() -> f64 {
    DEFAULT_LOCATION_THRESHOLD
}

fn default_overlap_threshold() -> f64 {
    DEFAULT_OVERLAP_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorClass {
    Sentence,
    Paragraph,
    Global,
    Ambiguous,
}

#[derive(Debug, Clone)]
struct CompiledIndicator {
    class: IndicatorClass,
    phrase: String,
    target: Option<Target>,
    regex: Regex,
}

#[derive(Debug, Clone)]
pub struct IndicatorTable {
    file: IndicatorTableFile,
    compiled: Vec<CompiledIndicator>,
}

const NUMBER: &str = r"(?P<n>\d+|[零〇一二两三四五六七八九十百]+|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|thirteen|fourteen|fifteen|sixteen|seventeen|eighteen|nineteen|twenty)";
const ORDINAL: &str = r"(?P<n>\d+(?:st|nd|rd|th)|first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth|eleventh|twelfth|thirteenth|fourteenth|fifteenth|sixteenth|seventeenth|eighteenth|nineteenth|twentieth)";

const CARDINALS: [&str; 20] = [
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve", "thirteen",
    "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
];
const ORDINALS: [&str; 20] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth", "eleventh",
    "twelfth", "thirteenth", "fourteenth", "fifteenth", "sixteenth", "seventeenth", "eighteenth", "nineteenth",
    "twentieth",
];

fn compile_phrase(phrase: &str) -> Result<Regex, IndicatorTableError> {
    let words: Vec<String> = phrase.split_whitespace().map(regex::escape).collect();
    if words.is_empty() {
        return Err(IndicatorTableError::Invalid("empty indicator phrase".into()));
    }
    let body = words.join(r"\s+").replace(r"\{n\}", NUMBER).replace(r"\{ord\}", ORDINAL);
    let trimmed = phrase.trim();
    let latin_edge = |c: Option<char>| c.is_some_and(|c| c.is_ascii_alphanumeric() || c == '{' || c == '}');
    let pattern = format!(
        "(?i){}{}{}",
        if latin_edge(trimmed.chars().next()) { r"\b" } else { "" },
        body,
        if latin_edge(trimmed.chars().last()) { r"\b" } else { "" },
    );
    Regex::new(&pattern).map_err(|e| IndicatorTableError::Invalid(format!("phrase `{phrase}`: {e}")))
}

/// Parses Arabic digits, English cardinals and ordinals, and Chinese numerals.
pub fn parse_number(text: &str) -> Option<usize> {
    let t = text.trim().to_lowercase();
    if let Ok(n) = t.trim_end_matches(|c: char| c.is_ascii_alphabetic()).parse::<usize>() {
        return Some(n);
    }
    if let Some(i) = CARDINALS.iter().position(|w| *w == t) {
        return Some(i + 1);
    }
    if let Some(i) = ORDINALS.iter().position(|w| *w == t) {
        return Some(i + 1);
    }
    parse_chinese_numeral(&t)
}

fn chinese_digit(c: char) -> Option<usize> {
    Some(match c {
        '零' | '〇' => 0,
        '一' => 1,
        '二' | '两' => 2,
        '三' => 3,
        '四' => 4,
        '五' => 5,
        '六' => 6,
        '七' => 7,
        '八' => 8,
        '九' => 9,
        _ => return None,
    })
}

/// Chinese numerals below 1000, e.g. 三, 十二, 二十, 一百零五.
pub fn parse_chinese_numeral(text: &str) -> Option<usize> {
    if text.is_empty() {
        return None;
    }
    let mut total = 0;
    let mut digit: Option<usize> = None;
    for c in text.chars() {
        match c {
            '十' => {
                total += digit.take().unwrap_or(1) * 10;
            }
            '百' => {
                total += digit.take()? * 100;
            }
            '零' | '〇' => {}
            _ => {
                let d = chinese_digit(c)?;
                if digit.is_some() {
                    return None;
                }
                digit = Some(d);
            }
        }
    }
    total += digit.unwrap_or(0);
    (total > 0).then_some(total)
}

impl IndicatorTable {
    pub fn from_file_record(file: IndicatorTableFile) -> Result<Self, IndicatorTableError> {
        for (name, t) in [("location_threshold", file.location_threshold), ("overlap_threshold", file.overlap_threshold)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(IndicatorTableError::Invalid(format!("{name} {t} outside (0,1]")));
            }
        }
        let sets: [(IndicatorClass, BTreeSet<String>); 4] = [
            (IndicatorClass::Sentence, file.sentence.iter().map(|e| norm(&e.phrase)).collect()),
            (IndicatorClass::Paragraph, file.paragraph.iter().map(|e| norm(&e.phrase)).collect()),
            (IndicatorClass::Global, file.global.iter().map(|p| norm(p)).collect()),
            (IndicatorClass::Ambiguous, file.ambiguous.iter().map(|p| norm(p)).collect()),
        ];
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                if let Some(shared) = sets[i].1.intersection(&sets[j].1).next() {
                    return Err(IndicatorTableError::Invalid(format!(
                        "`{shared}` is both a {:?} and a {:?} indicator",
                        sets[i].0, sets[j].0
                    )));
                }
            }
        }
        let mut compiled = Vec::new();
        for (class, entries) in [(IndicatorClass::Sentence, &file.sentence), (IndicatorClass::Paragraph, &file.paragraph)] {
            for e in entries {
                let numbered = matches!(e.target, Target::Numbered | Target::NumberedFromLast);
                let has_slot = e.phrase.contains("{n}") || e.phrase.contains("{ord}");
                if numbered != has_slot {
                    return Err(IndicatorTableError::Invalid(format!(
                        "phrase `{}` and its target disagree on a number slot",
                        e.phrase
                    )));
                }
                compiled.push(CompiledIndicator {
                    class,
                    phrase: e.phrase.clone(),
                    target: Some(e.target),
                    regex: compile_phrase(&e.phrase)?,
                });
            }
        }
        for (class, phrases) in [(IndicatorClass::Global, &file.global), (IndicatorClass::Ambiguous, &file.ambiguous)] {
            for p in phrases {
                compiled.push(CompiledIndicator { class, phrase: p.clone(), target: None, regex: compile_phrase(p)? });
            }
        }
        Ok(IndicatorTable { file, compiled })
    }

    pub fn from_json(json: &str) -> Result<Self, IndicatorTableError> {
        let file: IndicatorTableFile =
            serde_json::from_str(json).map_err(|e| IndicatorTableError::Malformed(e.to_string()))?;
        Self::from_file_record(file)
    }

    pub fn load(path: &Path) -> Result<Self, IndicatorTableError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| IndicatorTableError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_file_record(&self) -> IndicatorTableFile {
        self.file.clone()
    }

    pub fn location_threshold(&self) -> f64 {
        self.file.location_threshold
    }

    pub fn overlap_threshold(&self) -> f64 {
        self.file.overlap_threshold
    }

    pub fn with_thresholds(mut self, location: f64, overlap: f64) -> Self {
        self.file.location_threshold = location;
        self.file.overlap_threshold = overlap;
        self
    }

    /// All indicator occurrences in `text`, keeping the longest of any
    /// overlapping matches (earlier start wins ties).
    pub fn find(&self, text: &str) -> Vec<IndicatorMatch> {
        let mut all = Vec::new();
        for ind in &self.compiled {
            for caps in ind.regex.captures_iter(text) {
                let m = caps.get(0).expect("group 0");
                if m.as_str().is_empty() {
                    continue;
                }
                let number = caps.name("n").and_then(|n| parse_number(n.as_str()));
                if caps.name("n").is_some() && number.is_none() {
                    continue;
                }
                all.push(IndicatorMatch {
                    class: ind.class,
                    phrase: ind.phrase.clone(),
                    target: ind.target,
                    number,
                    start: m.start(),
                    end: m.end(),
                    text: m.as_str().to_string(),
                });
            }
        }
        all.sort_by(|a, b| (b.end - b.start).cmp(&(a.end - a.start)).then(a.start.cmp(&b.start)));
        let mut kept: Vec<IndicatorMatch> = Vec::new();
        for m in all {
            if kept.iter().all(|k| m.end <= k.start || m.start >= k.end) {
                kept.push(m);
            }
        }
        kept.sort_by_key(|m| m.start);
        kept
    }
}

impl Default for IndicatorTable {
    fn default() -> Self {
        Self::from_json(include_str!("../../data/indicators.json")).expect("bundled indicator table is valid")
    }
}

fn norm(p: &str) -> String {
    p.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMatch {
    pub class: IndicatorClass,
    pub phrase: String,
    pub target: Option<Target>,
    pub number: Option<usize>,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Splits `count` units into three contiguous thirds, remainder going to
/// the front, and returns the 1-based indices of the requested third.
/// With fewer than three units: beginning is the first, ending the last,
/// middle all of them.
pub fn resolve_ambiguous_span(word: SpanWord, count: usize) -> BTreeSet<usize> {
    if count == 0 {
        return BTreeSet::new();
    }
    if count < 3 {
        return match word {
            SpanWord::Beginning => [1].into(),
            SpanWord::Ending => [count].into(),
            SpanWord::Middle => (1..=count).collect(),
        };
    }
    let base = count / 3;
    let extra = count % 3;
    let sizes: Vec<usize> = (0..3).map(|i| base + usize::from(i < extra)).collect();
    let (start, len) = match word {
        SpanWord::Beginning => (0, sizes[0]),
        SpanWord::Middle => (sizes[0], sizes[1]),
        SpanWord::Ending => (sizes[0] + sizes[1], sizes[2]),
    };
    (start + 1..=start + len).collect()
}

/// Resolves a sentence or paragraph match to an index in `1..=count`.
pub fn resolve_target(m: &IndicatorMatch, count: usize) -> BTreeSet<usize> {
    let from_last = |k: usize| (k >= 1 && k <= count).then(|| count + 1 - k);
    let single = |i: Option<usize>| i.filter(|&i| i >= 1 && i <= count).into_iter().collect();
    match m.target {
        Some(Target::Numbered) => single(m.number),
        Some(Target::NumberedFromLast) => single(m.number.and_then(from_last)),
        Some(Target::Nth(k)) => single(Some(k)),
        Some(Target::FromLast(k)) => single(from_last(k)),
        Some(Target::Span(w)) => resolve_ambiguous_span(w, count),
        None => BTreeSet::new(),
    }
}

pub fn class_level(class: IndicatorClass) -> Option<LocationLevel> {
    match class {
        IndicatorClass::Sentence => Some(LocationLevel::Sentence),
        IndicatorClass::Paragraph => Some(LocationLevel::Paragraph),
        IndicatorClass::Global => Some(LocationLevel::Global),
        IndicatorClass::Ambiguous => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(parse_number("12"), Some(12));
        assert_eq!(parse_number("3rd"), Some(3));
        assert_eq!(parse_number("Second"), Some(2));
        assert_eq!(parse_number("seven"), Some(7));
        assert_eq!(parse_chinese_numeral("二"), Some(2));
        assert_eq!(parse_chinese_numeral("两"), Some(2));
        assert_eq!(parse_chinese_numeral("十"), Some(10));
        assert_eq!(parse_chinese_numeral("十二"), Some(12));
        assert_eq!(parse_chinese_numeral("二十"), Some(20));
        assert_eq!(parse_chinese_numeral("二十三"), Some(23));
        assert_eq!(parse_chinese_numeral("一百零五"), Some(105));
        assert_eq!(parse_chinese_numeral("零"), None);
        assert_eq!(parse_chinese_numeral("二二"), None);
    }

    #[test]
    fn spans_split_into_thirds() {
        assert_eq!(resolve_ambiguous_span(SpanWord::Middle, 9), [4, 5, 6].into());
        assert_eq!(resolve_ambiguous_span(SpanWord::Beginning, 10), [1, 2, 3, 4].into());
        assert_eq!(resolve_ambiguous_span(SpanWord::Middle, 10), [5, 6, 7].into());
        assert_eq!(resolve_ambiguous_span(SpanWord::Ending, 10), [8, 9, 10].into());
        for w in [SpanWord::Beginning, SpanWord::Middle, SpanWord::Ending] {
            assert_eq!(resolve_ambiguous_span(w, 1), [1].into());
        }
        assert_eq!(resolve_ambiguous_span(SpanWord::Middle, 2), [1, 2].into());
        assert_eq!(resolve_ambiguous_span(SpanWord::Ending, 2), [2].into());
    }

    #[test]
    fn longest_match_wins() {
        let t = IndicatorTable::default();
        let found = t.find("I liked the last sentence best.");
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].class, IndicatorClass::Sentence);
        let found = t.find("倒数第二段很好");
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].target, Some(Target::NumberedFromLast));
        assert_eq!(found[0].number, Some(2));
    }

    #[test]
    fn latin_phrases_respect_word_boundaries() {
        let t = IndicatorTable::default();
        assert!(t.find("a lasting scar").is_empty());
        assert!(t.find("generally speaking").iter().any(|m| m.class == IndicatorClass::Global));
        let m = &t.find("Paragraph 9 is too optimistic")[0];
        assert_eq!((m.class, m.number), (IndicatorClass::Paragraph, Some(9)));
        let m = &t.find("the second-to-last paragraph")[..];
        assert!(m.iter().all(|m| m.class != IndicatorClass::Sentence));
    }

    #[test]
    fn rejects_overlapping_classes_and_bad_thresholds() {
        let bad = r#"{"global":["overall"],"ambiguous":["Overall"]}"#;
        assert!(matches!(IndicatorTable::from_json(bad), Err(IndicatorTableError::Invalid(_))));
        let bad = r#"{"location_threshold": 0}"#;
        assert!(matches!(IndicatorTable::from_json(bad), Err(IndicatorTableError::Invalid(_))));
        let bad = r#"{"sentence":[{"phrase":"sentence","target":"numbered"}]}"#;
        assert!(matches!(IndicatorTable::from_json(bad), Err(IndicatorTableError::Invalid(_))));
        let bad = r#"{"sentence":[{"phrase":"sentence {n}","target":{"nth":1}}]}"#;
        assert!(matches!(IndicatorTable::from_json(bad), Err(IndicatorTableError::Invalid(_))));
    }

    #[test]
    fn out_of_range_targets_resolve_to_nothing() {
        let t = IndicatorTable::default();
        let m = &t.find("sentence 41")[0];
        assert!(resolve_target(m, 40).is_empty());
        assert_eq!(resolve_target(m, 41), [41].into());
    }
}
