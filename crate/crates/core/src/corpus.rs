//! Corpus layout and the intermediate datasets the pipeline runs on.
//!
//! A corpus is a directory of per-document subdirectories. Each document
//! directory holds:
//!
//! ```text
//! <root>/<doc_id>/
//!     ocr.txt           raw OCR plain text (optional; reconstructed from hOCR)
//!     clean.txt         human-rectified text, lowercased, empty lines removed
//!     page.hocr         Tesseract hOCR for the cover page (mandatory)
//!     annotations.json  standoff field annotations over clean.txt (optional)
//!     gt.json           ground-truth metadata record (optional)
//! ```
//!
//! All character offsets count Unicode scalar values, not bytes.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hocr;

/// The seven metadata fields extracted from a cover page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Title,
    Author,
    Degree,
    Program,
    Institution,
    Year,
    Advisor,
}

impl FieldKind {
    /// All fields in canonical order.
    pub const ALL: [FieldKind; 7] = [
        FieldKind::Title,
        FieldKind::Author,
        FieldKind::Degree,
        FieldKind::Program,
        FieldKind::Institution,
        FieldKind::Year,
        FieldKind::Advisor,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FieldKind::Title => "title",
            FieldKind::Author => "author",
            FieldKind::Degree => "degree",
            FieldKind::Program => "program",
            FieldKind::Institution => "institution",
            FieldKind::Year => "year",
            FieldKind::Advisor => "advisor",
        }
    }

    pub fn parse(name: &str) -> Option<FieldKind> {
        FieldKind::ALL.iter().copied().find(|f| f.as_str() == name)
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A standoff annotation: a half-open character range of `clean_text`
/// carrying one field label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub field: FieldKind,
    /// Inclusive start, in Unicode scalar values.
    pub start: usize,
    /// Exclusive end.
    pub end: usize,
}

/// The extracted (or ground-truth) values for one cover page.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub institution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisor: Option<String>,
}

impl MetadataRecord {
    pub fn get(&self, field: FieldKind) -> Option<&str> {
        match field {
            FieldKind::Title => self.title.as_deref(),
            FieldKind::Author => self.author.as_deref(),
            FieldKind::Degree => self.degree.as_deref(),
            FieldKind::Program => self.program.as_deref(),
            FieldKind::Institution => self.institution.as_deref(),
            FieldKind::Year => self.year.as_deref(),
            FieldKind::Advisor => self.advisor.as_deref(),
        }
    }

    pub fn set(&mut self, field: FieldKind, value: Option<String>) {
        let slot = match field {
            FieldKind::Title => &mut self.title,
            FieldKind::Author => &mut self.author,
            FieldKind::Degree => &mut self.degree,
            FieldKind::Program => &mut self.program,
            FieldKind::Institution => &mut self.institution,
            FieldKind::Year => &mut self.year,
            FieldKind::Advisor => &mut self.advisor,
        };
        *slot = value;
    }

    pub fn is_empty(&self) -> bool {
        FieldKind::ALL.iter().all(|f| self.get(*f).is_none())
    }

    /// Checks the year constraint: four digits in `[1000, 2999]`.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if let Some(year) = &self.year {
            let ok = year.len() == 4
                && year.chars().all(|c| c.is_ascii_digit())
                && (1000..=2999).contains(&year.parse::<u32>().unwrap_or(0));
            if !ok {
                return Err(CorpusError::Validation(format!(
                    "year {year:?} is not a 4-digit integer in [1000, 2999]"
                )));
            }
        }
        Ok(())
    }
}

/// One cover page with its OCR text, rectified text, and optional labels.
#[derive(Debug, Clone)]
pub struct Document {
    pub doc_id: String,
    /// Raw OCR plain text. When `ocr.txt` is absent this is the
    /// reconstruction from hOCR tokens (words joined by spaces, lines by
    /// newlines), which keeps token offsets consistent by construction.
    pub ocr_text: String,
    /// Human-rectified text: lowercased, misspellings fixed, empty lines
    /// removed, line breaks kept.
    pub clean_text: String,
    pub hocr_path: PathBuf,
    pub annotations: Vec<Annotation>,
    pub ground_truth: Option<MetadataRecord>,
}

impl Document {
    /// Structural equality ignoring `hocr_path` (which moves with the
    /// corpus root on save/load).
    pub fn content_eq(&self, other: &Document) -> bool {
        self.doc_id == other.doc_id
            && self.ocr_text == other.ocr_text
            && self.clean_text == other.clean_text
            && self.annotations == other.annotations
            && self.ground_truth == other.ground_truth
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON at {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Validation(String),
    #[error("corpus split needs at least 2 documents, got {0}")]
    TooFewDocuments(usize),
    #[error("train fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
}

/// A per-document load failure; the loader keeps going past these.
#[derive(Debug)]
pub struct DocumentError {
    pub doc_id: String,
    pub message: String,
}

impl fmt::Display for DocumentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.doc_id, self.message)
    }
}

/// The result of loading a corpus root: every document that validated,
/// plus one error per document that did not.
#[derive(Debug, Default)]
pub struct LoadOutcome {
    pub documents: Vec<Document>,
    pub errors: Vec<DocumentError>,
}

fn read_text(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Validates annotation ranges: in bounds, start < end, non-overlapping.
pub fn validate_annotations(annotations: &[Annotation], clean_text: &str) -> Result<(), CorpusError> {
    let len = char_len(clean_text);
    let mut sorted: Vec<&Annotation> = annotations.iter().collect();
    sorted.sort_by_key(|a| (a.start, a.end));
    for ann in &sorted {
        if ann.start >= ann.end {
            return Err(CorpusError::Validation(format!(
                "annotation {} has start {} >= end {}",
                ann.field, ann.start, ann.end
            )));
        }
        if ann.end > len {
            return Err(CorpusError::Validation(format!(
                "annotation {} range {}..{} exceeds clean text length {}",
                ann.field, ann.start, ann.end, len
            )));
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(CorpusError::Validation(format!(
                "annotations {} {}..{} and {} {}..{} overlap",
                pair[0].field, pair[0].start, pair[0].end, pair[1].field, pair[1].start, pair[1].end
            )));
        }
    }
    Ok(())
}

fn load_document(dir: &Path, doc_id: &str) -> Result<Document, CorpusError> {
    let hocr_path = dir.join("page.hocr");
    if !hocr_path.is_file() {
        return Err(CorpusError::Validation("missing mandatory file page.hocr".into()));
    }
    let clean_path = dir.join("clean.txt");
    if !clean_path.is_file() {
        return Err(CorpusError::Validation("missing mandatory file clean.txt".into()));
    }
    let clean_text = read_text(&clean_path)?;
    if clean_text.contains("\n\n") {
        return Err(CorpusError::Validation(
            "clean.txt contains consecutive newlines (empty lines must be removed)".into(),
        ));
    }

    let ocr_path = dir.join("ocr.txt");
    let ocr_text = if ocr_path.is_file() {
        read_text(&ocr_path)?
    } else {
        let content = read_text(&hocr_path)?;
        let page = hocr::parse_hocr(&content)
            .map_err(|e| CorpusError::Validation(format!("cannot reconstruct OCR text: {e}")))?;
        page.text()
    };

    let ann_path = dir.join("annotations.json");
    let annotations: Vec<Annotation> = if ann_path.is_file() {
        let raw = read_text(&ann_path)?;
        serde_json::from_str(&raw).map_err(|source| CorpusError::Json {
            path: ann_path.clone(),
            source,
        })?
    } else {
        Vec::new()
    };
    validate_annotations(&annotations, &clean_text)?;

    let gt_path = dir.join("gt.json");
    let ground_truth: Option<MetadataRecord> = if gt_path.is_file() {
        let raw = read_text(&gt_path)?;
        let record: MetadataRecord = serde_json::from_str(&raw).map_err(|source| CorpusError::Json {
            path: gt_path.clone(),
            source,
        })?;
        record.validate()?;
        Some(record)
    } else {
        None
    };

    Ok(Document {
        doc_id: doc_id.to_string(),
        ocr_text,
        clean_text,
        hocr_path,
        annotations,
        ground_truth,
    })
}

/// Loads every document subdirectory under `root`, sorted by `doc_id`.
///
/// Documents that fail to load or validate are reported in
/// [`LoadOutcome::errors`] instead of aborting the whole load.
pub fn load_corpus(root: &Path) -> Result<LoadOutcome, CorpusError> {
    let entries = fs::read_dir(root).map_err(|source| CorpusError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut ids: Vec<String> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        if entry.path().is_dir() {
            ids.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    ids.sort();

    let mut outcome = LoadOutcome::default();
    let mut seen = BTreeSet::new();
    for doc_id in ids {
        if doc_id.is_empty() || !seen.insert(doc_id.clone()) {
            outcome.errors.push(DocumentError {
                doc_id: doc_id.clone(),
                message: "empty or duplicate doc_id".into(),
            });
            continue;
        }
        match load_document(&root.join(&doc_id), &doc_id) {
            Ok(doc) => outcome.documents.push(doc),
            Err(err) => outcome.errors.push(DocumentError {
                doc_id,
                message: err.to_string(),
            }),
        }
    }
    Ok(outcome)
}

/// Writes documents back out in the corpus layout. The hOCR file is copied
/// from each document's `hocr_path`.
pub fn save_corpus(documents: &[Document], root: &Path) -> Result<(), CorpusError> {
    for doc in documents {
        let dir = root.join(&doc.doc_id);
        fs::create_dir_all(&dir).map_err(|source| CorpusError::Io {
            path: dir.clone(),
            source,
        })?;
        let write = |name: &str, data: &str| -> Result<(), CorpusError> {
            let path = dir.join(name);
            fs::write(&path, data).map_err(|source| CorpusError::Io { path, source })
        };
        write("ocr.txt", &doc.ocr_text)?;
        write("clean.txt", &doc.clean_text)?;
        let dest = dir.join("page.hocr");
        if doc.hocr_path != dest {
            let hocr = read_text(&doc.hocr_path)?;
            write("page.hocr", &hocr)?;
        }
        if !doc.annotations.is_empty() {
            let json = serde_json::to_string_pretty(&doc.annotations).expect("serializable");
            write("annotations.json", &json)?;
        }
        if let Some(gt) = &doc.ground_truth {
            let json = serde_json::to_string_pretty(gt).expect("serializable");
            write("gt.json", &json)?;
        }
    }
    Ok(())
}

/// Deterministic shuffle-and-partition of a corpus into train and test
/// splits. The train side gets `round(n * train_fraction)` documents.
pub fn split_corpus(
    docs: Vec<Document>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<Document>, Vec<Document>), CorpusError> {
    if docs.len() < 2 {
        return Err(CorpusError::TooFewDocuments(docs.len()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::BadFraction(train_fraction));
    }
    let n = docs.len();
    let n_train = ((n as f64) * train_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut docs: Vec<Option<Document>> = docs.into_iter().map(Some).collect();
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    for (rank, idx) in order.into_iter().enumerate() {
        let doc = docs[idx].take().expect("each index visited once");
        if rank < n_train {
            train.push(doc);
        } else {
            test.push(doc);
        }
    }
    Ok((train, test))
}
