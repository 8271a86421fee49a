//! Label vocabularies shared by the rule engines, the judge and the evaluator.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Pragmatic function of a comment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticLabel {
    Statement,
    Question,
    Exclamation,
    Suggestion,
    Sarcasm,
}

impl SemanticLabel {
    pub const ALL: [SemanticLabel; 5] = [
        SemanticLabel::Statement,
        SemanticLabel::Question,
        SemanticLabel::Exclamation,
        SemanticLabel::Suggestion,
        SemanticLabel::Sarcasm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SemanticLabel::Statement => "statement",
            SemanticLabel::Question => "question",
            SemanticLabel::Exclamation => "exclamation",
            SemanticLabel::Suggestion => "suggestion",
            SemanticLabel::Sarcasm => "sarcasm",
        }
    }
}

impl fmt::Display for SemanticLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for SemanticLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        SemanticLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == lower)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Granularity of the text a comment refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocationLevel {
    Sentence,
    Paragraph,
    Global,
}

impl LocationLevel {
    pub const ALL: [LocationLevel; 3] =
        [LocationLevel::Sentence, LocationLevel::Paragraph, LocationLevel::Global];

    pub fn as_str(self) -> &'static str {
        match self {
            LocationLevel::Sentence => "sentence",
            LocationLevel::Paragraph => "paragraph",
            LocationLevel::Global => "global",
        }
    }
}

impl fmt::Display for LocationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LocationLevel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        LocationLevel::ALL
            .into_iter()
            .find(|l| l.as_str() == lower)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// A location: a level plus the sentence or paragraph indices it covers.
///
/// Global anchors carry no indices. Sentence indices are global across the
/// article, paragraph indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Anchor {
    pub level: LocationLevel,
    #[serde(default)]
    pub indices: BTreeSet<usize>,
}

impl Anchor {
    pub fn global() -> Self {
        Anchor { level: LocationLevel::Global, indices: BTreeSet::new() }
    }

    pub fn sentences(indices: impl IntoIterator<Item = usize>) -> Self {
        Anchor { level: LocationLevel::Sentence, indices: indices.into_iter().collect() }
    }

    pub fn paragraphs(indices: impl IntoIterator<Item = usize>) -> Self {
        Anchor { level: LocationLevel::Paragraph, indices: indices.into_iter().collect() }
    }

    /// Level-appropriate shape: global has no indices, the others have some.
    pub fn is_well_formed(&self) -> bool {
        match self.level {
            LocationLevel::Global => self.indices.is_empty(),
            _ => !self.indices.is_empty(),
        }
    }
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level == LocationLevel::Global {
            return f.write_str("global");
        }
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{} {{{}}}", self.level, idx.join(","))
    }
}

/// Serde adapter writing `None` as the string `"undetermined"`.
pub mod undetermined {
    use serde::de::DeserializeOwned;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub const UNDETERMINED: &str = "undetermined";

    pub fn serialize<T: Serialize, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => v.serialize(s),
            None => s.serialize_str(UNDETERMINED),
        }
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<Option<T>, D::Error>
    where
        T: DeserializeOwned,
        D: Deserializer<'de>,
    {
        let value = serde_json::Value::deserialize(d)?;
        if value.as_str() == Some(UNDETERMINED) || value.is_null() {
            return Ok(None);
        }
        T::deserialize(value).map(Some).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_parse_case_insensitively() {
        assert_eq!("Question".parse::<SemanticLabel>().unwrap(), SemanticLabel::Question);
        assert_eq!(" sarcasm ".parse::<SemanticLabel>().unwrap(), SemanticLabel::Sarcasm);
        assert!("animal".parse::<SemanticLabel>().is_err());
        assert_eq!("PARAGRAPH".parse::<LocationLevel>().unwrap(), LocationLevel::Paragraph);
    }

    #[test]
    fn anchor_json_shape() {
        let a = Anchor::sentences([5, 3]);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"level":"sentence","indices":[3,5]}"#);
        let g: Anchor = serde_json::from_str(r#"{"level":"global"}"#).unwrap();
        assert_eq!(g, Anchor::global());
        assert!(g.is_well_formed());
        assert!(!Anchor::paragraphs([]).is_well_formed());
    }
}
