//! Segments a corpus article into numbered paragraphs and sentences and
//! prints the tokens of each sentence.
//!
//!     cargo run --example segment_article [corpus.json]

use std::path::PathBuf;

use commentscope::corpus::load_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/pengyu.json"));
    let corpus = load_corpus(&path)?;
    let article = &corpus.article;
    println!(
        "{} ({:?}): {} paragraphs, {} sentences",
        article.title,
        article.language,
        article.paragraph_count(),
        article.sentence_count()
    );
    for p in &article.paragraphs {
        println!("[P {}]", p.index);
        for s in &p.sentences {
            println!("  [S {}] {}", s.global_index, s.text);
            println!("         tokens: {}", s.tokens.join(" "));
        }
    }
    Ok(())
}
