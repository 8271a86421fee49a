//! Cue phrase matching shared by the rule engines.
//!
//! A phrase containing CJK characters matches as a plain substring of the
//! sentence text, since CJK has no word boundaries. Any other phrase matches
//! as a contiguous run of lowercased words, case-insensitively, with light
//! inflection tolerance on each word ("jam" matches "jams", "love" matches
//! "loved" and "loving").

use crate::corpus::tokenize::{is_cjk, words};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Phrase {
    Substring(String),
    Words(Vec<String>),
}

impl Phrase {
    pub fn new(text: &str) -> Option<Phrase> {
        let text = text.trim();
        if text.is_empty() {
            return None;
        }
        if text.chars().any(is_cjk) {
            return Some(Phrase::Substring(text.to_string()));
        }
        let ws: Vec<String> = words(text).into_iter().map(|t| t.text).collect();
        (!ws.is_empty()).then_some(Phrase::Words(ws))
    }

    /// Whether the phrase occurs in `text`.
    pub fn matches(&self, text: &str) -> bool {
        match self {
            Phrase::Substring(s) => text.contains(s.as_str()),
            Phrase::Words(ws) => {
                let sentence: Vec<String> = words(text).into_iter().map(|t| t.text).collect();
                matches_words(ws, &sentence)
            }
        }
    }
}

/// Contiguous, inflection-tolerant match of `phrase` inside `sentence`.
pub fn matches_words(phrase: &[String], sentence: &[String]) -> bool {
    if phrase.is_empty() || phrase.len() > sentence.len() {
        return false;
    }
    sentence
        .windows(phrase.len())
        .any(|window| window.iter().zip(phrase).all(|(w, k)| word_matches(w, k)))
}

/// `word` equals `key` or is a regular inflection of it.
pub fn word_matches(word: &str, key: &str) -> bool {
    if word == key {
        return true;
    }
    let Some(rest) = word.strip_prefix(key) else {
        // "love" -> "loving", "lov" + "ing"
        return key.len() > 2
            && key.ends_with('e')
            && word.strip_prefix(&key[..key.len() - 1]).is_some_and(|r| r == "ing" || r == "ed");
    };
    key.len() > 2 && matches!(rest, "s" | "es" | "ed" | "d" | "ing")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_phrases() {
        let p = Phrase::new("traffic jam").unwrap();
        assert!(p.matches("I just love traffic jams"));
        assert!(!p.matches("traffic lights jam"));
        assert!(Phrase::new("Point out").unwrap().matches("I want to POINT OUT something"));
        assert!(Phrase::new("love").unwrap().matches("Loving it"));
        assert!(!Phrase::new("like").unwrap().matches("That is likely"));
        assert!(!Phrase::new("so").unwrap().matches("soda"));
    }

    #[test]
    fn cjk_substrings() {
        let p = Phrase::new("建议").unwrap();
        assert_eq!(p, Phrase::Substring("建议".into()));
        assert!(p.matches("我建议先录像"));
    }

    #[test]
    fn blank_phrase() {
        assert!(Phrase::new("  ").is_none());
        assert!(Phrase::new("?!").is_none());
    }
}
