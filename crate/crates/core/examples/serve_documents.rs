//! Annotates the fixture in memory and serves it, as `commentscope serve`
//! would serve the written file.
//!
//!     cargo run --example serve_documents [127.0.0.1:8080]
//!     curl 'http://127.0.0.1:8080/documents/pengyu/view?min_likes=50&min_replies=5'

use std::path::PathBuf;
use std::sync::Arc;

use commentscope::config::Config;
use commentscope::corpus::load_corpus;
use commentscope::pipeline::{assemble_document, Strategy};
use commentscope::service::{serve, DocumentRegistry};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let corpus_path = root.join("fixtures/pengyu.json");
    let config = Config { transcript: Some(root.join("transcripts/pengyu.jsonl")), ..Config::default() };
    let corpus = load_corpus(&corpus_path)?;
    let (pipeline, _) = config.pipeline(&[Strategy::Hybrid], &corpus_path, &corpus.article, config.chat_provider()?)?;
    let preds = pipeline.run(&corpus.article, &corpus.comments, Strategy::Hybrid)?;
    let doc = assemble_document(&corpus.article, &preds, &corpus.comments, config.highlight_min_comments);

    let mut registry = DocumentRegistry::default();
    registry.insert_document(&doc)?;
    let addr = std::env::args().nth(1).unwrap_or_else(|| config.listen.clone()).parse()?;
    println!("serving `{}` on http://{addr} (Ctrl-C to stop)", doc.id());
    serve(addr, Arc::new(registry)).await?;
    Ok(())
}
