//! Builds the annotated document for the fixture and prints what a reader
//! would see: per-sentence badges with the top comment and pie counts,
//! paragraph and global groups, keyword highlights, and a filtered view.
//!
//!     cargo run --example annotate_document [min_likes] [min_replies]

use std::path::PathBuf;

use commentscope::config::Config;
use commentscope::corpus::load_corpus;
use commentscope::pipeline::{apply_filters, assemble_document, AnnotatedDocument, FilterSpec, Strategy};

fn summarize(doc: &AnnotatedDocument) {
    for p in &doc.article.paragraphs {
        for s in &p.sentences {
            let Some(group) = doc.sentence_groups.get(&s.index) else { continue };
            let top = &doc.top_comment[&s.index];
            let pie: Vec<String> =
                doc.pie_data.get(&s.index).into_iter().flatten().map(|(l, n)| format!("{l}:{n}")).collect();
            println!("  [S{}] {} comment(s), top {top}, pie {{{}}}", s.index, group.len(), pie.join(", "));
        }
        if let Some(group) = doc.paragraph_groups.get(&p.index) {
            let ids: Vec<&str> = group.iter().map(|c| c.id.as_str()).collect();
            println!("  [P{}] {}", p.index, ids.join(" "));
        }
    }
    let global: Vec<&str> = doc.global_comments.iter().map(|c| c.id.as_str()).collect();
    println!("  global: {}", global.join(" "));
    println!("  undetermined: {}", doc.undetermined.join(" "));
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let corpus_path = root.join("fixtures/pengyu.json");
    let config = Config { transcript: Some(root.join("transcripts/pengyu.jsonl")), ..Config::default() };
    let corpus = load_corpus(&corpus_path)?;
    let (pipeline, _) = config.pipeline(&[Strategy::Hybrid], &corpus_path, &corpus.article, config.chat_provider()?)?;
    let preds = pipeline.run(&corpus.article, &corpus.comments, Strategy::Hybrid)?;
    let doc = assemble_document(&corpus.article, &preds, &corpus.comments, config.highlight_min_comments);

    println!("{} ({} comments)", doc.article.title, doc.visible_count());
    summarize(&doc);
    let words: Vec<String> = doc.keyword_highlights.iter().map(|h| format!("{}@S{}", h.text, h.sentence)).collect();
    println!("  highlights: {}", words.join(" "));

    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>());
    let filter = FilterSpec {
        min_likes: args.next().transpose()?.unwrap_or(50),
        min_replies: args.next().transpose()?.unwrap_or(5),
        ..FilterSpec::default()
    };
    let view = apply_filters(&doc, &filter);
    println!("\nlikes >= {}, replies >= {}: {} comments", filter.min_likes, filter.min_replies, view.visible_count());
    summarize(&view);
    Ok(())
}
