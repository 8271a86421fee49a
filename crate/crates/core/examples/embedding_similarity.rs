//! Cosine similarity under the offline hashed n-gram embedder, and keyword
//! overlap on tokenized text.
//!
//!     cargo run --example embedding_similarity -- "traffic jam" "traffic jams"

use std::collections::BTreeSet;

use commentscope::corpus::{tokenize, Language};
use commentscope::similarity::{keyword_overlap, text_similarity, HashedNgramEmbedder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let pairs: Vec<(String, String)> = if args.len() >= 2 {
        args.chunks(2).filter(|c| c.len() == 2).map(|c| (c[0].clone(), c[1].clone())).collect()
    } else {
        [
            ("traffic jam", "traffic jams"),
            ("You should appeal.", "you should"),
            ("There was no surveillance footage.", "no footage of the moment she fell"),
            ("法院判决", "法院的判决"),
            ("kindness", "lawsuit"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
    };
    let embedder = HashedNgramEmbedder::default();
    println!("{:<40} {:<40} {:>7} {:>8}", "a", "b", "cosine", "overlap");
    for (a, b) in pairs {
        let cos = text_similarity(&embedder, &a, &b)?;
        let ta: BTreeSet<String> = tokenize(&a, Language::detect(&a)).into_iter().collect();
        let tb: BTreeSet<String> = tokenize(&b, Language::detect(&b)).into_iter().collect();
        println!("{a:<40} {b:<40} {cos:>7.3} {:>8.3}", keyword_overlap(&ta, &tb));
    }
    Ok(())
}
