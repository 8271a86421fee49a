//! The hybrid path for a handful of fixture comments, showing each judge
//! call and its outcome. Answers come from the replay transcript, so this
//! runs offline.
//!
//!     cargo run --example replay_judge [c03 c13 c44 ...]

use std::path::PathBuf;
use std::sync::Arc;

use commentscope::config::Config;
use commentscope::corpus::load_corpus;
use commentscope::judge::{ChatProvider, RecordingProvider, ReplayProvider};
use commentscope::location_rules::LocationContext;
use commentscope::pipeline::Strategy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let corpus_path = root.join("fixtures/pengyu.json");
    let mut ids: Vec<String> = std::env::args().skip(1).collect();
    if ids.is_empty() {
        ids = ["c03", "c13", "c22", "c44"].map(String::from).to_vec();
    }

    let corpus = load_corpus(&corpus_path)?;
    let replay = ReplayProvider::load(&root.join("transcripts/pengyu.jsonl"))?;
    let recorder = Arc::new(RecordingProvider::new(replay));
    let provider: Arc<dyn ChatProvider> = recorder.clone();
    let (pipeline, _) = Config::default().pipeline(&[Strategy::Hybrid], &corpus_path, &corpus.article, Some(provider))?;
    let ctx = LocationContext::new(&corpus.article, &pipeline.indicators, &*pipeline.embedder, pipeline.entities.clone())?;

    for id in &ids {
        let Some(comment) = corpus.comments.iter().find(|c| &c.id == id) else {
            eprintln!("no comment `{id}`");
            continue;
        };
        let before = recorder.calls();
        let out = pipeline.classify_comment(comment, &ctx, Strategy::Hybrid);
        println!("{id}: {}", comment.text);
        println!("  candidates: {:?} / {:?}", out.semantic_candidates, out.location_candidates.iter().map(|a| a.to_string()).collect::<Vec<_>>());
        for step in out.semantic_steps.iter().chain(&out.location_steps) {
            println!("  {:?}: {}", step.kind, step.outcome);
        }
        let semantic = out.semantic.map_or("undetermined".to_string(), |l| l.to_string());
        let location = out.location.as_ref().map_or("undetermined".to_string(), |a| a.to_string());
        println!("  -> {semantic} ({:?}), {location} ({:?}), {} judge calls", out.semantic_provenance, out.location_provenance, recorder.calls() - before);
    }
    Ok(())
}
