//! Field-level evaluation with fuzzy matching, token-level metrics, and
//! the multi-model comparison table.
//!
//! A predicted field counts as correct when its normalized Levenshtein
//! similarity to the ground truth meets the threshold (0.95 by default).
//! Two normalizations are supported: [`SimilarityNorm::Ratio`], the
//! indel ratio `(|a|+|b|-d)/(|a|+|b|)` with substitutions costing 2 (the
//! behavior of the usual Levenshtein-ratio libraries), and
//! [`SimilarityNorm::MaxLen`], `1 - d/max(|a|,|b|)` with unit costs.
//! `Ratio` is the default; it is the one that accepts small
//! hyphenation/spacing offsets such as "thermo- fluid" vs "thermo-fluid"
//! at the 0.95 threshold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::edit_distance;
use crate::corpus::{FieldKind, MetadataRecord};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions ({preds}) and gold ({gold}) have different lengths")]
    LengthMismatch { preds: usize, gold: usize },
    #[error("threshold must be in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error("sequence {index} has {pred} predicted labels but {gold} gold labels")]
    TokenLengthMismatch { index: usize, pred: usize, gold: usize },
}

/// Similarity normalization variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityNorm {
    /// `(|a|+|b| - d) / (|a|+|b|)` where substitutions cost 2.
    #[default]
    Ratio,
    /// `1 - levenshtein(a, b) / max(|a|, |b|)` with unit costs.
    MaxLen,
}

fn normalize_text(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Edit distance with insert/delete cost 1 and substitution cost 2.
fn indel_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur: Vec<usize> = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + if ca == cb { 0 } else { 2 };
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Similarity in `[0, 1]` after lowercasing and collapsing whitespace
/// runs. Two empty strings score 1.
pub fn similarity_with(a: &str, b: &str, norm: SimilarityNorm) -> f64 {
    let a = normalize_text(a);
    let b = normalize_text(b);
    let (la, lb) = (a.chars().count(), b.chars().count());
    match norm {
        SimilarityNorm::Ratio => {
            let total = la + lb;
            if total == 0 {
                return 1.0;
            }
            (total - indel_distance(&a, &b)) as f64 / total as f64
        }
        SimilarityNorm::MaxLen => {
            let max = la.max(lb);
            if max == 0 {
                return 1.0;
            }
            1.0 - edit_distance(&a, &b) as f64 / max as f64
        }
    }
}

/// Similarity under the default normalization.
pub fn similarity(a: &str, b: &str) -> f64 {
    similarity_with(a, b, SimilarityNorm::default())
}

/// Precision/recall/F1 with raw counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Prf {
    fn from_counts(tp: usize, fp: usize, fn_: usize, support: usize) -> Prf {
        let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
        let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf { precision, recall, f1, support, tp, fp, fn_ }
    }
}

const REPORT_FORMAT_VERSION: u32 = 1;

/// Field-level (and optionally token-level) evaluation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub threshold: f64,
    pub similarity: SimilarityNorm,
    pub doc_count: usize,
    /// One entry per metadata field, always all seven.
    pub fields: BTreeMap<String, Prf>,
    /// Mean F1 over fields with nonzero support.
    pub macro_f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_level: Option<BTreeMap<String, Prf>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl EvalReport {
    pub fn field(&self, field: FieldKind) -> &Prf {
        &self.fields[field.as_str()]
    }

    /// Per-field summary table for stdout.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<14}{:>10}{:>10}{:>10}{:>9}\n",
            "field", "precision", "recall", "f1", "support"
        ));
        for field in FieldKind::ALL {
            let prf = self.field(field);
            out.push_str(&format!(
                "{:<14}{:>10.3}{:>10.3}{:>10.3}{:>9}\n",
                field.as_str(),
                prf.precision,
                prf.recall,
                prf.f1,
                prf.support
            ));
        }
        out.push_str(&format!("{:<14}{:>30.3}\n", "macro", self.macro_f1));
        out
    }
}

/// Scores predictions against ground truth, field by field.
///
/// Per document and field: a true positive needs both sides present and
/// similar at the threshold; a prediction with absent or dissimilar gold
/// is a false positive; gold with absent or dissimilar prediction is a
/// false negative (a dissimilar pair is both). `TP + FN = support` holds
/// per field.
pub fn evaluate(
    predictions: &[MetadataRecord],
    gold: &[MetadataRecord],
    threshold: f64,
    norm: SimilarityNorm,
) -> Result<EvalReport, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch { preds: predictions.len(), gold: gold.len() });
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(EvalError::BadThreshold(threshold));
    }

    let mut fields = BTreeMap::new();
    let mut macro_sum = 0.0;
    let mut macro_count = 0usize;
    for field in FieldKind::ALL {
        let (mut tp, mut fp, mut fn_, mut support) = (0usize, 0usize, 0usize, 0usize);
        for (pred, truth) in predictions.iter().zip(gold) {
            let p = pred.get(field);
            let g = truth.get(field);
            if g.is_some() {
                support += 1;
            }
            match (p, g) {
                (Some(p), Some(g)) => {
                    if similarity_with(p, g, norm) >= threshold {
                        tp += 1;
                    } else {
                        fp += 1;
                        fn_ += 1;
                    }
                }
                (Some(_), None) => fp += 1,
                (None, Some(_)) => fn_ += 1,
                (None, None) => {}
            }
        }
        let prf = Prf::from_counts(tp, fp, fn_, support);
        if support > 0 {
            macro_sum += prf.f1;
            macro_count += 1;
        }
        fields.insert(field.as_str().to_string(), prf);
    }

    Ok(EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        threshold,
        similarity: norm,
        doc_count: gold.len(),
        fields,
        macro_f1: if macro_count > 0 { macro_sum / macro_count as f64 } else { 0.0 },
        token_level: None,
        config_hash: None,
    })
}

/// Token-level per-label precision/recall/F1 over parallel label
/// sequences.
pub fn token_metrics(
    gold: &[Vec<String>],
    pred: &[Vec<String>],
) -> Result<BTreeMap<String, Prf>, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch { preds: pred.len(), gold: gold.len() });
    }
    let mut counts: BTreeMap<&str, (usize, usize, usize, usize)> = BTreeMap::new();
    for (index, (g_seq, p_seq)) in gold.iter().zip(pred).enumerate() {
        if g_seq.len() != p_seq.len() {
            return Err(EvalError::TokenLengthMismatch {
                index,
                pred: p_seq.len(),
                gold: g_seq.len(),
            });
        }
        for (g, p) in g_seq.iter().zip(p_seq) {
            let g_entry = counts.entry(g).or_default();
            g_entry.3 += 1; // support
            if g == p {
                g_entry.0 += 1; // tp
            } else {
                g_entry.2 += 1; // fn
                counts.entry(p).or_default().1 += 1; // fp
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|(label, (tp, fp, fn_, support))| {
            (label.to_string(), Prf::from_counts(tp, fp, fn_, support))
        })
        .collect())
}

/// Side-by-side F1 comparison of several evaluated models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub models: Vec<String>,
    pub rows: Vec<ComparisonRow>,
    /// Names of the pair behind the delta column, when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_pair: Option<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub field: String,
    pub f1: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// Builds the comparison table. When both `crf-visual` and `crf-text`
/// reports are present, a per-field delta column (`crf-visual` minus
/// `crf-text`) is added.
pub fn compare_models(reports: &[(String, EvalReport)]) -> Comparison {
    let models: Vec<String> = reports.iter().map(|(name, _)| name.clone()).collect();
    let visual = models.iter().position(|m| m == "crf-visual");
    let text = models.iter().position(|m| m == "crf-text");
    let delta_pair = match (visual, text) {
        (Some(_), Some(_)) => Some(("crf-visual".to_string(), "crf-text".to_string())),
        _ => None,
    };

    let mut rows = Vec::new();
    for field in FieldKind::ALL {
        let f1: Vec<f64> = reports.iter().map(|(_, r)| r.field(field).f1).collect();
        let delta = match (visual, text) {
            (Some(v), Some(t)) => Some(f1[v] - f1[t]),
            _ => None,
        };
        rows.push(ComparisonRow { field: field.as_str().to_string(), f1, delta });
    }
    let macro_f1: Vec<f64> = reports.iter().map(|(_, r)| r.macro_f1).collect();
    let macro_delta = match (visual, text) {
        (Some(v), Some(t)) => Some(macro_f1[v] - macro_f1[t]),
        _ => None,
    };
    rows.push(ComparisonRow { field: "macro".to_string(), f1: macro_f1, delta: macro_delta });
    Comparison { models, rows, delta_pair }
}

impl Comparison {
    /// Plain-text table for stdout.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<14}", "field"));
        for model in &self.models {
            out.push_str(&format!("{model:>12}"));
        }
        if self.delta_pair.is_some() {
            out.push_str(&format!("{:>12}", "delta"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:<14}", row.field));
            for f1 in &row.f1 {
                out.push_str(&format!("{f1:>12.3}"));
            }
            if let Some(delta) = row.delta {
                out.push_str(&format!("{delta:>+12.3}"));
            }
            out.push('\n');
        }
        out
    }
}
