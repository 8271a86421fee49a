//! Word tokenization with stop-word removal.
//!
//! Latin-script text is split into lowercased alphanumeric words. CJK runs
//! have no word boundaries, so they are covered by every single character
//! plus every overlapping character bigram. No dictionary is involved, which
//! keeps the output a pure function of the input text and the stop list.

use std::collections::HashSet;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

/// Stop-word list and punctuation conventions are selected per profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Zh,
    #[default]
    En,
}

impl Language {
    /// Picks `Zh` when CJK characters are at least as frequent as Latin letters.
    pub fn detect(text: &str) -> Language {
        let (mut cjk, mut latin) = (0usize, 0usize);
        for c in text.chars() {
            if is_cjk(c) {
                cjk += 1;
            } else if c.is_alphabetic() {
                latin += 1;
            }
        }
        if cjk > 0 && cjk >= latin {
            Language::Zh
        } else {
            Language::En
        }
    }
}

pub fn is_cjk(c: char) -> bool {
    matches!(c,
        '\u{4e00}'..='\u{9fff}'
        | '\u{3400}'..='\u{4dbf}'
        | '\u{f900}'..='\u{faff}'
        | '\u{20000}'..='\u{2a6df}')
}

/// A token with its character (not byte) offsets in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default)]
pub struct StopWords {
    words: HashSet<String>,
}

static DEFAULT_EN: OnceLock<Arc<StopWords>> = OnceLock::new();
static DEFAULT_ZH: OnceLock<Arc<StopWords>> = OnceLock::new();

impl StopWords {
    /// Parses one word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopWords { words }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn default_for(language: Language) -> Arc<StopWords> {
        match language {
            Language::En => DEFAULT_EN
                .get_or_init(|| Arc::new(Self::parse(include_str!("../../data/stopwords-en.txt"))))
                .clone(),
            Language::Zh => DEFAULT_ZH
                .get_or_init(|| Arc::new(Self::parse(include_str!("../../data/stopwords-zh.txt"))))
                .clone(),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Words before stop-word removal: lowercased Latin words and single CJK
/// characters. Used where fragment length is measured in words.
pub fn words(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    for (pos, c) in text.chars().enumerate() {
        if is_cjk(c) {
            flush_word(&mut out, &mut current, start, pos);
            out.push(Token { text: c.to_string(), start: pos, end: pos + 1 });
        } else if c.is_alphanumeric() {
            if current.is_empty() {
                start = pos;
            }
            current.extend(c.to_lowercase());
        } else {
            flush_word(&mut out, &mut current, start, pos);
        }
    }
    let len = text.chars().count();
    flush_word(&mut out, &mut current, start, len);
    out
}

fn flush_word(out: &mut Vec<Token>, current: &mut String, start: usize, end: usize) {
    if !current.is_empty() {
        out.push(Token { text: std::mem::take(current), start, end });
    }
}

/// All tokens before stop-word removal, in text order. For each CJK
/// character the unigram is emitted, followed by the bigram starting there
/// when the next character is also CJK.
pub fn raw_tokens(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    for w in words(text) {
        out.push(w.clone());
        if w.end - w.start == 1 && is_cjk(chars[w.start]) {
            if let Some(&next) = chars.get(w.end) {
                if is_cjk(next) {
                    out.push(Token {
                        text: format!("{}{}", chars[w.start], next),
                        start: w.start,
                        end: w.end + 1,
                    });
                }
            }
        }
    }
    out
}

/// Tokenizer bound to a stop-word list.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    stopwords: Arc<StopWords>,
}

impl Tokenizer {
    pub fn new(stopwords: Arc<StopWords>) -> Self {
        Tokenizer { stopwords }
    }

    pub fn for_language(language: Language) -> Self {
        Tokenizer::new(StopWords::default_for(language))
    }

    pub fn tokenize_spans(&self, text: &str) -> Vec<Token> {
        raw_tokens(text).into_iter().filter(|t| !self.stopwords.contains(&t.text)).collect()
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.tokenize_spans(text).into_iter().map(|t| t.text).collect()
    }

    pub fn stopwords(&self) -> &StopWords {
        &self.stopwords
    }
}

/// Tokenizes with the shipped stop-word list for `language`.
pub fn tokenize(text: &str, language: Language) -> Vec<String> {
    Tokenizer::for_language(language).tokenize(text)
}
