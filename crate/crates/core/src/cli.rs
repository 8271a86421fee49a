//! Command-line entry points: ingest, classify, annotate, evaluate, serve.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::corpus::{load_corpus, Corpus};
use crate::evaluator::{compare_strategies, render_confusion_csv, render_csv, render_text, EvalReport};
use crate::pipeline::{apply_filters, assemble_document, ClassifiedComment, FilterSpec, Pipeline, Strategy};
use crate::service::DocumentRegistry;

#[derive(Debug, Parser)]
#[command(name = "commentscope", version, about = "Classify reader comments by function and anchor them to article text")]
pub struct Cli {
    /// JSON config file; `CS_*` environment variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Replay judge answers from this JSONL transcript.
    #[arg(long, global = true)]
    pub transcript: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus file and print its shape.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        /// Also write the normalized corpus here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify every comment and write the results as JSON.
    Classify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify (or reuse a classification) and write the annotated document.
    Annotate {
        #[command(flatten)]
        run: RunArgs,
        /// Reuse the output of `classify` instead of classifying again.
        #[arg(long)]
        classified: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Compare all strategies against the gold labels.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        /// Directory for report.txt, report.csv and confusion.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Serve annotated documents over HTTP.
    Serve {
        /// Annotated document files or directories of them.
        #[arg(long = "documents", required = true, num_args = 1..)]
        documents: Vec<PathBuf>,
        /// Listen address; defaults to the config value.
        #[arg(long)]
        listen: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "hybrid")]
    pub strategy: Strategy,
}

#[derive(Debug, Args, Default)]
pub struct FilterArgs {
    #[arg(long)]
    pub min_likes: Option<String>,
    #[arg(long)]
    pub min_replies: Option<String>,
    /// `all` or a comma list of labels, optionally including `undetermined`.
    #[arg(long)]
    pub labels: Option<String>,
}

impl FilterArgs {
    pub fn spec(&self) -> Result<FilterSpec, String> {
        FilterSpec::from_params(self.min_likes.as_deref(), self.min_replies.as_deref(), self.labels.as_deref())
            .map_err(|e| e.to_string())
    }
}

/// Output of `classify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationFile {
    pub article_id: String,
    pub strategy: Strategy,
    pub replayed: bool,
    pub comments: Vec<ClassifiedComment>,
}

type CliResult = Result<(), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn write(path: &Path, text: &str) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn config(cli: &Cli) -> Result<Config, String> {
    let mut config = Config::resolve(cli.config.as_deref()).map_err(err)?;
    if let Some(t) = &cli.transcript {
        config.transcript = Some(t.clone());
    }
    Ok(config)
}

fn prepare(config: &Config, corpus_path: &Path, strategies: &[Strategy]) -> Result<(Corpus, Pipeline), String> {
    let corpus = load_corpus(corpus_path).map_err(err)?;
    let provider = if strategies.iter().any(|s| s.uses_judge()) { config.chat_provider().map_err(err)? } else { None };
    let (pipeline, warnings) = config.pipeline(strategies, corpus_path, &corpus.article, provider).map_err(err)?;
    for w in warnings {
        tracing::warn!("{w}");
    }
    Ok((corpus, pipeline))
}

fn classify(config: &Config, run: &RunArgs) -> Result<(Corpus, ClassificationFile), String> {
    let (corpus, pipeline) = prepare(config, &run.corpus, &[run.strategy])?;
    let comments = pipeline.run(&corpus.article, &corpus.comments, run.strategy).map_err(err)?;
    let file = ClassificationFile {
        article_id: corpus.article.id.clone(),
        strategy: run.strategy,
        replayed: config.transcript.is_some() && run.strategy.uses_judge(),
        comments,
    };
    Ok((corpus, file))
}

fn execute(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Ingest { corpus, out } => {
            let c = load_corpus(corpus).map_err(err)?;
            let gold = c.comments.iter().filter(|c| c.gold.is_some()).count();
            println!(
                "{}: {} paragraphs, {} sentences, {} comments ({} with gold labels), language {:?}",
                c.article.id,
                c.article.paragraph_count(),
                c.article.sentence_count(),
                c.comments.len(),
                gold,
                c.article.language
            );
            if let Some(out) = out {
                write(out, &(c.to_json() + "\n"))?;
            }
            Ok(())
        }
        Command::Classify { run, out } => {
            let config = config(cli)?;
            let (_, file) = classify(&config, run)?;
            write(out, &(serde_json::to_string_pretty(&file).map_err(err)? + "\n"))?;
            println!("classified {} comments -> {}", file.comments.len(), out.display());
            Ok(())
        }
        Command::Annotate { run, classified, out, filter } => {
            let config = config(cli)?;
            let filter = filter.spec()?;
            let (corpus, comments) = match classified {
                Some(path) => {
                    let corpus = load_corpus(&run.corpus).map_err(err)?;
                    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                    let file: ClassificationFile = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                    if file.article_id != corpus.article.id {
                        return Err(format!("{} classifies article `{}`, not `{}`", path.display(), file.article_id, corpus.article.id));
                    }
                    (corpus, file.comments)
                }
                None => {
                    let (corpus, file) = classify(&config, run)?;
                    (corpus, file.comments)
                }
            };
            let doc = assemble_document(&corpus.article, &comments, &corpus.comments, config.highlight_min_comments);
            let view = apply_filters(&doc, &filter);
            write(out, &view.to_json())?;
            println!("annotated document `{}` -> {}", doc.id(), out.display());
            Ok(())
        }
        Command::Evaluate { corpus, out_dir } => {
            let config = config(cli)?;
            let (c, pipeline) = prepare(&config, corpus, &Strategy::ALL)?;
            let reports: Vec<EvalReport> =
                compare_strategies(&pipeline, &c.article, &c.comments, config.transcript.is_some()).map_err(err)?;
            let text = render_text(&reports);
            write(&out_dir.join("report.txt"), &text)?;
            write(&out_dir.join("report.csv"), &render_csv(&reports))?;
            write(&out_dir.join("confusion.csv"), &render_confusion_csv(&reports))?;
            print!("{text}");
            Ok(())
        }
        Command::Serve { documents, listen } => {
            let config = config(cli)?;
            let registry = DocumentRegistry::load_paths(documents).map_err(err)?;
            if registry.is_empty() {
                return Err("no annotated documents found".into());
            }
            let listen = listen.clone().unwrap_or(config.listen);
            let addr = listen.parse().map_err(|e| format!("listen address `{listen}`: {e}"))?;
            let runtime = tokio::runtime::Runtime::new().map_err(err)?;
            runtime.block_on(crate::service::serve(addr, Arc::new(registry))).map_err(err)
        }
    }
}

/// Parses `args` and runs the command. Usage errors exit with 2, failures with 1.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn strategy_flag_parses() {
        let cli = Cli::try_parse_from(["cs", "classify", "--corpus", "c.json", "--strategy", "rule-only", "--out", "o.json"]).unwrap();
        match cli.command {
            Command::Classify { run, .. } => assert_eq!(run.strategy, Strategy::RuleOnly),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Cli::try_parse_from(["cs", "frobnicate"]).is_err());
    }
}
