//! Semantic rule candidates for comments given on the command line, with the
//! evidence behind each label.
//!
//!     cargo run --example classify_semantic -- "Why? You should appeal." "Great, another lawsuit."

use commentscope::corpus::{Comment, Language, Tokenizer};
use commentscope::semantic_rules::{classify_rules_semantic, CueTable};
use commentscope::similarity::HashedNgramEmbedder;

fn main() {
    let mut texts: Vec<String> = std::env::args().skip(1).collect();
    if texts.is_empty() {
        texts = vec![
            "Why? You should appeal.".into(),
            "Great, now I have to think twice before helping my own neighbors.".into(),
            "maybe try taking the metro instead".into(),
            "The verdict was announced in 2007.".into(),
        ];
    }
    let cues = CueTable::default();
    let embedder = HashedNgramEmbedder::default();
    for (i, text) in texts.iter().enumerate() {
        let tokenizer = Tokenizer::for_language(Language::detect(text));
        let comment = Comment::new(format!("c{}", i + 1), text.as_str(), 0, 0, &tokenizer);
        let candidates = classify_rules_semantic(&comment, &cues, &embedder);
        println!("{text}");
        if candidates.is_empty() {
            println!("  (no candidates)");
        }
        for (label, evidence) in &candidates.per_label_evidence {
            let why: Vec<String> =
                evidence.iter().map(|e| format!("{:?} `{}` in sentence {}", e.rule, e.cue, e.sentence)).collect();
            println!("  {label:<12} {}", why.join("; "));
        }
    }
}
