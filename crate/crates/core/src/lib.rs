//! Metadata extraction from scanned thesis and dissertation cover pages.
//!
//! The pipeline consumes Tesseract hOCR output plus a human-rectified
//! transcript of the same page, aligns the two at the character level,
//! transfers token bounding boxes onto the clean text, and tags tokens
//! with a linear-chain CRF under a BIO scheme to recover seven metadata
//! fields: title, author, degree, program, institution, year, advisor.
//!
//! Modules:
//!
//! - [`corpus`] - on-disk corpus layout, documents, annotations, ground truth
//! - [`hocr`] - hOCR parsing and bottom-left-origin bounding boxes
//! - [`align`] - edit-distance alignment and bbox projection onto clean text
//! - [`features`] - POS tagging plus the text and visual feature extractors
//! - [`bio`] - BIO encoding of annotations and span gluing of predictions
//! - [`crf`] - linear-chain CRF training, likelihood, and Viterbi decoding
//! - [`heuristic`] - regex/rule baseline extractor
//! - [`eval`] - fuzzy-matching field evaluation and model comparison
//! - [`synth`] - synthetic cover-page corpus generator
//! - [`pipeline`] - end-to-end wiring from documents to tagged records

pub mod align;
pub mod bio;
pub mod config;
pub mod corpus;
pub mod crf;
pub mod eval;
pub mod features;
pub mod heuristic;
pub mod hocr;
pub mod pipeline;
pub mod synth;
mod textutil;

pub use config::Config;
pub use corpus::{Annotation, Document, FieldKind, MetadataRecord};
pub use crf::{BioConstraint, CrfModel, Hyperparams, LabelSet, LabeledSequence};
pub use eval::{EvalReport, SimilarityNorm};
pub use hocr::{BBox, Page, Token};
