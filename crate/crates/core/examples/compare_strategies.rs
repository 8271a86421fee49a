//! Rule-only, LLM-only and hybrid runs over the fixture, scored against the
//! gold labels, with judge answers replayed from the checked-in transcript.
//!
//!     cargo run --example compare_strategies

use std::path::PathBuf;

use commentscope::config::Config;
use commentscope::corpus::load_corpus;
use commentscope::evaluator::{compare_strategies, render_confusion_csv, render_text};
use commentscope::pipeline::Strategy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let corpus_path = root.join("fixtures/pengyu.json");
    let config = Config { transcript: Some(root.join("transcripts/pengyu.jsonl")), ..Config::default() };
    let corpus = load_corpus(&corpus_path)?;
    let (pipeline, _) = config.pipeline(&Strategy::ALL, &corpus_path, &corpus.article, config.chat_provider()?)?;
    let reports = compare_strategies(&pipeline, &corpus.article, &corpus.comments, true)?;
    print!("{}", render_text(&reports));
    println!();
    print!("{}", render_confusion_csv(&reports));
    Ok(())
}
