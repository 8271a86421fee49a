//! Runs the rule stages over the bundled fixture and prints, for each
//! comment, the semantic and location candidates next to the gold labels.
//!
//!     cargo run --example locate_comments [corpus.json]

use std::path::PathBuf;

use commentscope::corpus::load_corpus;
use commentscope::location_rules::{classify_rules_location, EntityCache, IndicatorTable, LocationContext};
use commentscope::semantic_rules::{classify_rules_semantic, CueTable};
use commentscope::similarity::HashedNgramEmbedder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/pengyu.json"));
    let corpus = load_corpus(&path)?;
    let (entities, _) = EntityCache::load_or_extract(&EntityCache::path_for(&path), &corpus.article, None)?;
    let cues = CueTable::default();
    let table = IndicatorTable::default();
    let embedder = HashedNgramEmbedder::default();
    let ctx = LocationContext::new(&corpus.article, &table, &embedder, entities)?;
    for c in &corpus.comments {
        let sem = classify_rules_semantic(c, &cues, &embedder);
        let loc = classify_rules_location(c, &ctx);
        let labels: Vec<String> = sem.labels().iter().map(|l| l.to_string()).collect();
        let anchors: Vec<String> = loc.anchors().iter().map(|a| a.to_string()).collect();
        let gold = c.gold.as_ref().map(|g| format!("{} @ {}", g.semantic, g.anchor())).unwrap_or_default();
        println!("{:<4} [{}] [{}] via {:?}  gold: {}", c.id, labels.join(","), anchors.join(" | "), loc.stage(), gold);
        println!("     {}", c.text);
    }
    Ok(())
}
