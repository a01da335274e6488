//! `etdtag`: batch pipeline for extracting metadata from scanned thesis
//! cover pages.
//!
//! Typical flow:
//!
//! ```text
//! etdtag synth --out corpus --docs 240
//! etdtag train --corpus corpus --model-out model.json --visual
//! etdtag tag   --corpus corpus --model model.json --split test --out preds.json
//! etdtag eval  --corpus corpus --pred preds.json --split test --report report.json
//! etdtag compare --report heuristic=h.json --report crf-text=t.json \
//!                --report crf-visual=v.json --out comparison.json
//! ```

mod commands;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "etdtag", version, about = "Metadata extraction from scanned cover pages")]
struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every random choice in the pipeline flows from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimilarityArg {
    Ratio,
    MaxLen,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cover-page corpus in the on-disk layout.
    Synth {
        /// Output corpus directory.
        #[arg(long)]
        out: PathBuf,
        /// Number of documents to generate.
        #[arg(long)]
        docs: Option<usize>,
        /// Per-word OCR corruption probability.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Parse hOCR pages and write the reconstructed OCR plain text.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        /// Rewrite ocr.txt even when it already exists.
        #[arg(long)]
        force: bool,
    },
    /// Align OCR with clean text and write per-document token sidecars.
    Align {
        #[arg(long)]
        corpus: PathBuf,
        /// Directory for `<doc_id>.json` sidecars; default is
        /// `aligned.json` inside each document directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump per-token features in a CoNLL-like tab-separated format.
    Featurize {
        #[arg(long)]
        corpus: PathBuf,
        /// Output file; documents are separated by blank lines.
        #[arg(long)]
        out: PathBuf,
        /// Include the three visual features.
        #[arg(long)]
        visual: bool,
    },
    /// Train a CRF tagger on the train split.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
        /// Add the three visual features to the ten text features.
        #[arg(long)]
        visual: bool,
        #[arg(long)]
        l2: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        rate: Option<f64>,
        /// Train fraction of the corpus split.
        #[arg(long)]
        fraction: Option<f64>,
        /// Which side of the split to train on.
        #[arg(long, value_enum, default_value = "train")]
        split: SplitArg,
    },
    /// Tag documents with a trained model and write records as JSON.
    Tag {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        split: SplitArg,
        #[arg(long)]
        fraction: Option<f64>,
        /// Forbid invalid BIO transitions at decode time.
        #[arg(long)]
        strict_bio: bool,
    },
    /// Score predictions (or a model) against corpus ground truth.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        /// Prediction file from `tag` or `baseline`.
        #[arg(long)]
        pred: Option<PathBuf>,
        /// Model file; the documents are tagged on the fly and
        /// token-level metrics are included.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum)]
        similarity: Option<SimilarityArg>,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long)]
        fraction: Option<f64>,
        /// Where to write the JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        strict_bio: bool,
    },
    /// Run the rule baseline and write records as JSON.
    Baseline {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML file overriding the built-in cue lists.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "all")]
        split: SplitArg,
        #[arg(long)]
        fraction: Option<f64>,
    },
    /// Merge evaluation reports into a side-by-side comparison.
    Compare {
        /// Repeatable `name=report.json` pairs.
        #[arg(long = "report", required = true)]
        reports: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = commands::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
