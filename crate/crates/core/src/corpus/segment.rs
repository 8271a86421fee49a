//! Paragraph and sentence segmentation.
//!
//! Paragraphs are separated by blank lines. Sentences end at a run of
//! terminal punctuation (`。！？!?.` and the ellipsis forms `……`/`...`),
//! together with any closing quotes or brackets that follow the run. ASCII
//! terminals only close a sentence when followed by whitespace or the end of
//! the paragraph, so decimals and a few common abbreviations stay intact.

use std::ops::Range;

const CJK_TERMINALS: &[char] = &['。', '！', '？', '…'];
const ASCII_TERMINALS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', '”', '’', '」', '』', '）', ')', ']', '》', '】'];
const ABBREVIATIONS: &[&str] = &["mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "e.g", "i.e"];

pub fn is_terminal(c: char) -> bool {
    CJK_TERMINALS.contains(&c) || ASCII_TERMINALS.contains(&c)
}

/// Punctuation as far as trailing-symbol detection is concerned.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '。' | '，' | '、' | '；' | '：' | '？' | '！' | '…' | '—' | '–' | '“' | '”' | '‘' | '’'
                | '「' | '」' | '『' | '』' | '（' | '）' | '《' | '》' | '〈' | '〉' | '【' | '】'
                | '·' | '～' | '¿' | '¡'
        )
}

/// Final non-whitespace character of `text`, when it is punctuation.
pub fn ending_punctuation(text: &str) -> Option<char> {
    text.trim_end().chars().last().filter(|c| is_punctuation(*c))
}

/// Maximal suffix of punctuation characters, ignoring trailing whitespace.
pub fn trailing_punctuation(text: &str) -> String {
    let trimmed = text.trim_end();
    let run: Vec<char> = trimmed.chars().rev().take_while(|c| is_punctuation(*c)).collect();
    run.into_iter().rev().collect()
}

/// Byte ranges of the non-blank paragraphs of `body`.
pub fn paragraph_ranges(body: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut current: Option<Range<usize>> = None;
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        let content = line.trim_end_matches(['\n', '\r']);
        if content.trim().is_empty() {
            if let Some(r) = current.take() {
                out.push(r);
            }
        } else {
            let end = line_start + content.len();
            match current.as_mut() {
                Some(r) => r.end = end,
                None => current = Some(line_start..end),
            }
        }
    }
    if let Some(r) = current {
        out.push(r);
    }
    out
}

/// Byte ranges (relative to `text`) of the sentences of one paragraph. The
/// ranges are contiguous and cover `text`; leading whitespace belongs to the
/// sentence it precedes.
pub fn sentence_ranges(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let byte_at = |i: usize| if i < n { chars[i].0 } else { text.len() };
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < n {
        if !is_terminal(chars[i].1) {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut j = i;
        while j < n && is_terminal(chars[j].1) {
            j += 1;
        }
        let has_cjk = chars[run_start..j].iter().any(|(_, c)| CJK_TERMINALS.contains(c));
        while j < n && CLOSERS.contains(&chars[j].1) {
            j += 1;
        }
        let at_boundary = j == n || chars[j].1.is_whitespace();
        let lone_period = j - run_start == 1 && chars[run_start].1 == '.';
        let breaks = has_cjk
            || (at_boundary && !(lone_period && is_abbreviation(&text[..chars[run_start].0])));
        if breaks {
            let end = byte_at(j);
            if !text[start..end].trim().is_empty() {
                out.push(start..end);
                start = end;
            }
        }
        i = j;
    }
    if start < text.len() {
        if text[start..].trim().is_empty() {
            if let Some(last) = out.last_mut() {
                last.end = text.len();
            }
        } else {
            out.push(start..text.len());
        }
    }
    out
}

fn is_abbreviation(before: &str) -> bool {
    let word: String = before
        .chars()
        .rev()
        .take_while(|c| c.is_alphanumeric() || *c == '.')
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    let word = word.to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}
