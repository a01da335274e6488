//! Shared fixtures for the pipeline benchmarks: a synthetic corpus
//! materialized on disk, prepared documents, and a small trained model.

use etdtag::corpus::{load_corpus, Document};
use etdtag::crf::{CrfModel, Hyperparams};
use etdtag::features::LexiconTagger;
use etdtag::pipeline::{prepare_document, train_model, PreparedDocument};
use etdtag::synth::{write_corpus, SynthConfig};
use tempfile::TempDir;

pub struct Fixture {
    // Keeps the corpus directory alive for the duration of the benchmarks.
    _dir: TempDir,
    pub documents: Vec<Document>,
    pub prepared: Vec<PreparedDocument>,
    pub model: CrfModel,
}

pub fn fixture(docs: usize, epochs: usize) -> Fixture {
    let dir = TempDir::new().expect("tempdir");
    write_corpus(&SynthConfig { docs, seed: 42, noise: 0.08 }, dir.path()).expect("synth");
    let documents = load_corpus(dir.path()).expect("load").documents;
    let prepared: Vec<PreparedDocument> = documents
        .iter()
        .map(|d| prepare_document(d, &LexiconTagger).expect("prepare"))
        .collect();
    let hyper = Hyperparams { epochs, ..Hyperparams::default() };
    let model = train_model(&documents, true, hyper).expect("train");
    Fixture { _dir: dir, documents, prepared, model }
}
