//! Fixture loading shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use commentscope::config::Config;
use commentscope::corpus::{load_corpus, Corpus};
use commentscope::judge::{ChatProvider, RecordingProvider, ReplayProvider};
use commentscope::pipeline::{Pipeline, Strategy};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn corpus_path() -> PathBuf {
    root().join("fixtures/pengyu.json")
}

pub fn transcript_path() -> PathBuf {
    root().join("transcripts/pengyu.jsonl")
}

pub fn corpus() -> Corpus {
    load_corpus(corpus_path()).unwrap()
}

pub type Recorder = Arc<RecordingProvider<ReplayProvider>>;

/// The pipeline `classify`/`evaluate` build for the fixture, with the judge
/// answering from the checked-in transcript through a call recorder.
pub fn replay_pipeline(corpus: &Corpus) -> (Pipeline, Recorder) {
    let replay = ReplayProvider::load(&transcript_path()).unwrap();
    let recorder = Arc::new(RecordingProvider::new(replay));
    let (pipeline, _) =
        Config::default().pipeline(&Strategy::ALL, &corpus_path(), &corpus.article, Some(recorder.clone() as Arc<dyn ChatProvider>)).unwrap();
    (pipeline, recorder)
}

/// The rule-only pipeline, with no chat provider at all.
pub fn rule_pipeline(corpus: &Corpus) -> Pipeline {
    Config::default().pipeline(&[Strategy::RuleOnly], &corpus_path(), &corpus.article, None).unwrap().0
}
