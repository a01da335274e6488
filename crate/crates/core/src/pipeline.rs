//! End-to-end wiring: documents in, tagged records and reports out.
//!
//! For each document the pipeline parses the hOCR page, aligns its
//! reconstructed text with the clean transcript, projects bounding boxes
//! onto clean tokens, restores original casing from the OCR side,
//! extracts features, and encodes gold labels from annotations. Trained
//! models then decode token labels that are glued back into records.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{align, project_tokens, restore_case, AlignError};
use crate::bio::{self, BioError};
use crate::corpus::{Document, MetadataRecord};
use crate::crf::{BioConstraint, CrfError, CrfModel, Hyperparams, LabelSet, LabeledSequence};
use crate::eval::{evaluate, token_metrics, EvalError, EvalReport, SimilarityNorm};
use crate::features::{
    text_features, visual_features, FeatureError, FeatureMap, PosTag, PosTagger, TokenView,
};
use crate::heuristic::{extract_heuristic, HeuristicRules};
use crate::hocr::{parse_hocr, HocrError, Page, Token};
use crate::textutil::char_slice;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("document {doc_id}: {source}")]
    Hocr {
        doc_id: String,
        #[source]
        source: HocrError,
    },
    #[error("document {doc_id}: {source}")]
    Align {
        doc_id: String,
        #[source]
        source: AlignError,
    },
    #[error("document {doc_id}: {source}")]
    Feature {
        doc_id: String,
        #[source]
        source: FeatureError,
    },
    #[error("document {doc_id}: {source}")]
    Bio {
        doc_id: String,
        #[source]
        source: BioError,
    },
    #[error(transparent)]
    Crf(#[from] CrfError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("document {0} has no tokens after projection")]
    NoTokens(String),
    #[error("no documents with ground truth to evaluate")]
    NothingToEvaluate,
}

/// A document carried through alignment and feature extraction.
#[derive(Debug, Clone)]
pub struct PreparedDocument {
    pub doc_id: String,
    pub page: Page,
    /// Clean-text tokens with projected boxes and clean-text offsets.
    pub tokens: Vec<Token>,
    /// Case-restored token texts (the original-case sidecar).
    pub originals: Vec<String>,
    pub pos: Vec<PosTag>,
    pub text_features: Vec<FeatureMap>,
    pub visual_features: Vec<FeatureMap>,
    /// BIO labels from the document's annotations; all `O` when the
    /// document carries none.
    pub gold_labels: Vec<String>,
}

/// Runs alignment, projection, case restoration, POS tagging, and feature
/// extraction for one document.
pub fn prepare_document(
    doc: &Document,
    tagger: &dyn PosTagger,
) -> Result<PreparedDocument, PipelineError> {
    let hocr_text =
        std::fs::read_to_string(&doc.hocr_path).map_err(|source| PipelineError::Io {
            path: doc.hocr_path.clone(),
            source,
        })?;
    let page = parse_hocr(&hocr_text)
        .map_err(|source| PipelineError::Hocr { doc_id: doc.doc_id.clone(), source })?;

    let ocr_source = page.text();
    let map = align(&ocr_source, &doc.clean_text);
    let tokens = project_tokens(&page, &map, &doc.clean_text)
        .map_err(|source| PipelineError::Align { doc_id: doc.doc_id.clone(), source })?;
    if tokens.is_empty() {
        return Err(PipelineError::NoTokens(doc.doc_id.clone()));
    }
    let restored = restore_case(&ocr_source, &doc.clean_text, &map);
    let originals: Vec<String> = tokens
        .iter()
        .map(|t| char_slice(&restored, t.char_start, t.char_end).to_string())
        .collect();

    let refs: Vec<&str> = originals.iter().map(String::as_str).collect();
    let pos = tagger.tag(&refs);

    let views: Vec<TokenView> = originals
        .iter()
        .zip(&tokens)
        .map(|(text, tok)| TokenView { text, line_index: tok.line_index })
        .collect();
    let feature_err =
        |source| PipelineError::Feature { doc_id: doc.doc_id.clone(), source };
    let mut text_maps = Vec::with_capacity(tokens.len());
    for i in 0..tokens.len() {
        text_maps.push(text_features(&views, i, &pos).map_err(feature_err)?);
    }

    let line_starts = page.line_starts();
    let mut visual_maps = Vec::with_capacity(tokens.len());
    for tok in &tokens {
        let first = &page.tokens[line_starts[tok.line_index]];
        visual_maps.push(visual_features(tok, &page, first).map_err(feature_err)?);
    }

    let gold_labels = bio::encode(&tokens, &doc.annotations)
        .map_err(|source| PipelineError::Bio { doc_id: doc.doc_id.clone(), source })?;

    Ok(PreparedDocument {
        doc_id: doc.doc_id.clone(),
        page,
        tokens,
        originals,
        pos,
        text_features: text_maps,
        visual_features: visual_maps,
        gold_labels,
    })
}

/// Per-token feature maps, text features plus (optionally) visual ones.
pub fn feature_maps(prep: &PreparedDocument, visual: bool) -> Vec<FeatureMap> {
    prep.text_features
        .iter()
        .zip(&prep.visual_features)
        .map(|(t, v)| if visual { t.merged(v) } else { t.clone() })
        .collect()
}

/// The document as a CRF training sequence.
pub fn sequence_for(
    prep: &PreparedDocument,
    visual: bool,
) -> Result<LabeledSequence, PipelineError> {
    Ok(LabeledSequence::new(feature_maps(prep, visual), prep.gold_labels.clone())?)
}

/// Prepares documents and trains a CRF on their gold labels.
pub fn train_model(
    docs: &[Document],
    visual: bool,
    hyper: Hyperparams,
) -> Result<CrfModel, PipelineError> {
    let tagger = crate::features::LexiconTagger;
    let mut sequences = Vec::with_capacity(docs.len());
    for doc in docs {
        let prep = prepare_document(doc, &tagger)?;
        sequences.push(sequence_for(&prep, visual)?);
    }
    Ok(CrfModel::train(LabelSet::bio_default(), &sequences, hyper)?)
}

/// Decodes one prepared document into labels and a glued record.
///
/// Feature maps always include the visual features; models trained
/// without them ignore the unseen entries, so one code path serves both.
pub fn tag_document(
    model: &CrfModel,
    prep: &PreparedDocument,
    constraint: BioConstraint,
) -> Result<(Vec<String>, MetadataRecord), PipelineError> {
    let maps = feature_maps(prep, true);
    let labels = model.viterbi(&maps, constraint)?;
    let record = bio::decode(&prep.tokens, &labels)
        .map_err(|source| PipelineError::Bio { doc_id: prep.doc_id.clone(), source })?;
    Ok((labels, record))
}

/// Tags every document that has ground truth and scores the results,
/// including token-level metrics against the encoded gold labels.
pub fn evaluate_model(
    model: &CrfModel,
    docs: &[Document],
    threshold: f64,
    norm: SimilarityNorm,
    constraint: BioConstraint,
) -> Result<EvalReport, PipelineError> {
    let tagger = crate::features::LexiconTagger;
    let mut predictions = Vec::new();
    let mut gold_records = Vec::new();
    let mut predicted_labels = Vec::new();
    let mut gold_labels = Vec::new();
    for doc in docs {
        let Some(gt) = doc.ground_truth.clone() else { continue };
        let prep = prepare_document(doc, &tagger)?;
        let (labels, record) = tag_document(model, &prep, constraint)?;
        predictions.push(record);
        gold_records.push(gt);
        predicted_labels.push(labels);
        gold_labels.push(prep.gold_labels);
    }
    if gold_records.is_empty() {
        return Err(PipelineError::NothingToEvaluate);
    }
    let mut report = evaluate(&predictions, &gold_records, threshold, norm)?;
    report.token_level = Some(token_metrics(&gold_labels, &predicted_labels)?);
    Ok(report)
}

/// Runs the rule baseline over every document with ground truth and
/// scores it with the same fuzzy matching.
pub fn evaluate_heuristic(
    docs: &[Document],
    rules: &HeuristicRules,
    threshold: f64,
    norm: SimilarityNorm,
) -> Result<EvalReport, PipelineError> {
    let mut predictions = Vec::new();
    let mut gold_records = Vec::new();
    for doc in docs {
        let Some(gt) = doc.ground_truth.clone() else { continue };
        predictions.push(extract_heuristic(&doc.clean_text, rules));
        gold_records.push(gt);
    }
    if gold_records.is_empty() {
        return Err(PipelineError::NothingToEvaluate);
    }
    Ok(evaluate(&predictions, &gold_records, threshold, norm)?)
}

/// Sidecar JSON written by the `align` subcommand: clean tokens with
/// their projected pixel boxes.
#[derive(Debug, Serialize, Deserialize)]
pub struct AlignedDocument {
    pub doc_id: String,
    pub page_width: u32,
    pub page_height: u32,
    pub tokens: Vec<AlignedToken>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AlignedToken {
    pub text: String,
    pub original: String,
    pub line: usize,
    pub word: usize,
    /// `[x1, y1, x2, y2]` in bottom-left-origin pixels.
    pub bbox: [u32; 4],
    pub start: usize,
    pub end: usize,
}

impl AlignedDocument {
    pub fn from_prepared(prep: &PreparedDocument) -> AlignedDocument {
        AlignedDocument {
            doc_id: prep.doc_id.clone(),
            page_width: prep.page.width,
            page_height: prep.page.height,
            tokens: prep
                .tokens
                .iter()
                .zip(&prep.originals)
                .map(|(t, original)| AlignedToken {
                    text: t.text.clone(),
                    original: original.clone(),
                    line: t.line_index,
                    word: t.word_index,
                    bbox: [t.bbox.x1, t.bbox.y1, t.bbox.x2, t.bbox.y2],
                    start: t.char_start,
                    end: t.char_end,
                })
                .collect(),
        }
    }
}

/// One document in the CoNLL-style feature dump: `token<TAB>label` then
/// `name=value` columns, one token per row.
pub fn conll_rows(prep: &PreparedDocument, visual: bool) -> String {
    let maps = feature_maps(prep, visual);
    let mut out = String::new();
    for ((tok, label), map) in prep.tokens.iter().zip(&prep.gold_labels).zip(&maps) {
        out.push_str(&tok.text);
        out.push('\t');
        out.push_str(label);
        for pair in map.feature_strings() {
            out.push('\t');
            out.push_str(&pair);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_corpus;
    use crate::features::LexiconTagger;
    use crate::synth::{write_corpus, SynthConfig};

    fn tiny_corpus(dir: &std::path::Path, docs: usize, seed: u64) -> Vec<Document> {
        write_corpus(&SynthConfig { docs, seed, noise: 0.08 }, dir).unwrap();
        let outcome = load_corpus(dir).unwrap();
        assert!(outcome.errors.is_empty(), "{:?}", outcome.errors);
        outcome.documents
    }

    #[test]
    fn prepared_documents_are_consistent() {
        let dir = tempfile::tempdir().unwrap();
        let docs = tiny_corpus(dir.path(), 4, 33);
        for doc in &docs {
            let prep = prepare_document(doc, &LexiconTagger).unwrap();
            let n = prep.tokens.len();
            assert_eq!(prep.originals.len(), n);
            assert_eq!(prep.pos.len(), n);
            assert_eq!(prep.text_features.len(), n);
            assert_eq!(prep.visual_features.len(), n);
            assert_eq!(prep.gold_labels.len(), n);
            // The original-case sidecar lowercases back to the clean token.
            for (orig, tok) in prep.originals.iter().zip(&prep.tokens) {
                assert_eq!(orig.to_lowercase(), tok.text.to_lowercase());
                assert_eq!(orig.chars().count(), tok.text.chars().count());
            }
            // Case restoration actually recovered capitals somewhere.
            assert!(prep.originals.iter().any(|o| o.chars().any(char::is_uppercase)));
            // Gold labels cover all seven fields.
            let begins = prep.gold_labels.iter().filter(|l| l.starts_with("B-")).count();
            assert_eq!(begins, 7, "{:?}", prep.gold_labels);
        }
    }

    #[test]
    fn tiny_train_tag_eval_loop() {
        let dir = tempfile::tempdir().unwrap();
        let docs = tiny_corpus(dir.path(), 12, 91);
        let hyper = Hyperparams { epochs: 12, ..Hyperparams::default() };
        let model = train_model(&docs, true, hyper).unwrap();
        let report = evaluate_model(
            &model,
            &docs,
            0.95,
            SimilarityNorm::Ratio,
            BioConstraint::Off,
        )
        .unwrap();
        assert_eq!(report.doc_count, 12);
        assert_eq!(report.fields.len(), 7);
        assert!(report.token_level.is_some());
        // Trained and evaluated on the same tiny set: should fit well.
        assert!(report.macro_f1 > 0.5, "macro {}", report.macro_f1);
    }

    #[test]
    fn conll_rows_have_fixed_column_counts() {
        let dir = tempfile::tempdir().unwrap();
        let docs = tiny_corpus(dir.path(), 1, 5);
        let prep = prepare_document(&docs[0], &LexiconTagger).unwrap();
        let text_dump = conll_rows(&prep, false);
        for row in text_dump.lines() {
            assert_eq!(row.split('\t').count(), 2 + 10, "{row}");
        }
        let full_dump = conll_rows(&prep, true);
        for row in full_dump.lines() {
            assert_eq!(row.split('\t').count(), 2 + 13, "{row}");
        }
        assert_eq!(text_dump.lines().count(), prep.tokens.len());
    }

    #[test]
    fn aligned_document_serializes() {
        let dir = tempfile::tempdir().unwrap();
        let docs = tiny_corpus(dir.path(), 1, 6);
        let prep = prepare_document(&docs[0], &LexiconTagger).unwrap();
        let aligned = AlignedDocument::from_prepared(&prep);
        let json = serde_json::to_string(&aligned).unwrap();
        let back: AlignedDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.tokens.len(), prep.tokens.len());
        assert_eq!(back.doc_id, prep.doc_id);
    }
}
