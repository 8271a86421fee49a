//! Independent oracles and properties for segmentation, tokenization and the
//! similarity primitives.

use std::collections::HashSet;
use std::path::PathBuf;

use commentscope::corpus::tokenize::{Language, Tokenizer};
use commentscope::corpus::{load_corpus, segment_text};
use commentscope::similarity::{cosine, keyword_overlap, EmbeddingVector};
use proptest::prelude::*;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/pengyu.json")
}

/// Counts paragraphs (blocks of non-blank lines) and sentences (runs of
/// terminal punctuation followed by whitespace or the end of the block).
fn scan_counts(body: &str) -> (usize, usize) {
    let mut paragraphs = 0;
    let mut sentences = 0;
    let mut in_block = false;
    let mut block = String::new();
    let flush = |block: &mut String, sentences: &mut usize| {
        let chars: Vec<char> = block.chars().collect();
        let mut i = 0;
        let mut pending = false;
        while i < chars.len() {
            let c = chars[i];
            if matches!(c, '.' | '!' | '?' | '。' | '！' | '？') {
                let mut j = i;
                while j < chars.len() && matches!(chars[j], '.' | '!' | '?' | '。' | '！' | '？') {
                    j += 1;
                }
                while j < chars.len() && matches!(chars[j], '"' | '”' | '’' | ')' | '」') {
                    j += 1;
                }
                if j == chars.len() || chars[j].is_whitespace() {
                    *sentences += 1;
                    pending = false;
                } else {
                    pending = true;
                }
                i = j;
            } else {
                if !c.is_whitespace() {
                    pending = true;
                }
                i += 1;
            }
        }
        if pending {
            *sentences += 1;
        }
        block.clear();
    };
    for line in body.lines() {
        if line.trim().is_empty() {
            if in_block {
                flush(&mut block, &mut sentences);
            }
            in_block = false;
        } else {
            if !in_block {
                paragraphs += 1;
            }
            in_block = true;
            block.push_str(line);
            block.push(' ');
        }
    }
    if in_block {
        flush(&mut block, &mut sentences);
    }
    (paragraphs, sentences)
}

#[test]
fn fixture_counts_match_recorded_hand_count() {
    let corpus = load_corpus(fixture()).unwrap();
    let meta = corpus.meta.as_ref().expect("fixture carries meta");
    assert_eq!(corpus.article.paragraph_count(), meta["paragraph_count"].as_u64().unwrap() as usize);
    assert_eq!(corpus.article.sentence_count(), meta["sentence_count"].as_u64().unwrap() as usize);
    assert_eq!(corpus.article.paragraph_count(), 10);
    assert_eq!(corpus.comments.len(), 60);
}

#[test]
fn three_paragraph_counts_match_linear_scan() {
    let corpus = load_corpus(fixture()).unwrap();
    let body: String = corpus.article.body.split("\n\n").take(3).collect::<Vec<_>>().join("\n\n");
    let paragraphs = segment_text(&body, Language::En).unwrap();
    let sentences: usize = paragraphs.iter().map(|p| p.sentences.len()).sum();
    assert_eq!((paragraphs.len(), sentences), scan_counts(&body));
    assert_eq!(scan_counts(&corpus.article.body), (10, 40));
}

fn stop_words() -> HashSet<String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/stopwords-en.txt");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn is_han(c: char) -> bool {
    ('\u{4e00}'..='\u{9fff}').contains(&c) || ('\u{3400}'..='\u{4dbf}').contains(&c)
}

/// Second implementation of the tokenizer rules: lowercased alphanumeric
/// words, every Han character plus every adjacent Han pair, stop words out.
fn oracle_tokens(text: &str, stop: &HashSet<String>) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut word = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() && !is_han(c) {
            word.push_str(&c.to_lowercase().to_string());
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if is_han(c) {
            out.push(c.to_string());
            if i + 1 < chars.len() && is_han(chars[i + 1]) {
                out.push(format!("{c}{}", chars[i + 1]));
            }
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out.retain(|t| !stop.contains(t));
    out.sort();
    out
}

#[test]
fn fixture_tokens_match_oracle_tokenizer() {
    let corpus = load_corpus(fixture()).unwrap();
    let stop = stop_words();
    for s in corpus.article.sentences() {
        let mut ours = s.tokens.clone();
        ours.sort();
        assert_eq!(ours, oracle_tokens(&s.text, &stop), "sentence {}", s.global_index);
    }
    let tokenizer = Tokenizer::for_language(Language::En);
    for c in &corpus.comments {
        let mut ours = tokenizer.tokenize(&c.text);
        ours.sort();
        assert_eq!(ours, oracle_tokens(&c.text, &stop), "comment {}", c.id);
    }
}

fn body_strategy() -> impl Strategy<Value = String> {
    let word = prop::sample::select(vec!["court", "Peng", "bus", "kindness", "2007", "法院", "判决", "why", "help"]);
    let end = prop::sample::select(vec![".", "!", "?", "。", "？", "!\u{201d}", "..."]);
    let sentence = (prop::collection::vec(word, 1..6), end).prop_map(|(w, e)| format!("{}{}", w.join(" "), e));
    let paragraph = prop::collection::vec(sentence, 1..5).prop_map(|s| s.join(" "));
    prop::collection::vec(paragraph, 1..5).prop_map(|p| p.join("\n\n"))
}

proptest! {
    #[test]
    fn resegmenting_is_idempotent(body in body_strategy()) {
        let first = segment_text(&body, Language::En).unwrap();
        let rejoined = first
            .iter()
            .map(|p| p.sentences.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("\n\n");
        let second = segment_text(&rejoined, Language::En).unwrap();
        let key = |ps: &[commentscope::corpus::Paragraph]| -> Vec<(usize, usize, String)> {
            ps.iter().flat_map(|p| p.sentences.iter().map(|s| (p.index, s.global_index, s.text.clone()))).collect()
        };
        prop_assert_eq!(key(&first), key(&second));
    }

    #[test]
    fn sentence_numbering_is_dense(body in body_strategy()) {
        let paragraphs = segment_text(&body, Language::En).unwrap();
        let total: usize = paragraphs.iter().map(|p| p.sentences.len()).sum();
        let indices: Vec<usize> = paragraphs.iter().flat_map(|p| p.sentences.iter().map(|s| s.global_index)).collect();
        prop_assert_eq!(indices, (1..=total).collect::<Vec<_>>());
        let para_idx: Vec<usize> = paragraphs.iter().map(|p| p.index).collect();
        prop_assert_eq!(para_idx, (1..=paragraphs.len()).collect::<Vec<_>>());
    }

    #[test]
    fn cosine_matches_hand_rolled(a in prop::collection::vec(-10.0f64..10.0, 5), b in prop::collection::vec(-10.0f64..10.0, 5)) {
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let expected = if na == 0.0 || nb == 0.0 { 0.0 } else { dot / (na * nb) };
        let got = cosine(&EmbeddingVector::new(a).unwrap(), &EmbeddingVector::new(b).unwrap()).unwrap();
        prop_assert!((got - expected).abs() <= 1e-12, "{} vs {}", got, expected);
        prop_assert!((-1.0..=1.0).contains(&got));
    }

    #[test]
    fn overlap_is_share_of_first_set(a in prop::collection::btree_set("[a-e]", 0..5), b in prop::collection::btree_set("[a-e]", 0..5)) {
        let got = keyword_overlap(&a, &b);
        let expected = if a.is_empty() { 0.0 } else { a.intersection(&b).count() as f64 / a.len() as f64 };
        prop_assert_eq!(got, expected);
        prop_assert!((0.0..=1.0).contains(&got));
        let self_overlap = keyword_overlap(&a, &a);
        prop_assert_eq!(self_overlap, if a.is_empty() { 0.0 } else { 1.0 });
    }
}
