//! Linear-chain conditional random field.
//!
//! The model scores a label path as the sum of per-position emission
//! weights (one weight per active `name=value` feature and label) plus
//! label-pair transition weights between consecutive positions:
//!
//! ```text
//! score(y | x) = sum_t sum_{f in x_t} E[f, y_t]  +  sum_{t>0} T[y_{t-1}, y_t]
//! log p(y | x) = score(y | x) - logZ(x)
//! ```
//!
//! Training maximizes the regularized conditional log-likelihood with
//! mini-batch stochastic gradient ascent; decoding is Viterbi. All the
//! dynamic programs run in log space.

mod forward_backward;
mod train;
mod viterbi;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::FieldKind;
use crate::features::FeatureMap;

pub(crate) use forward_backward::{accumulate_gradient, emission_scores, forward, path_score};

#[derive(Debug, Error)]
pub enum CrfError {
    #[error("label set must not be empty")]
    EmptyLabelSet,
    #[error("label set must contain {0:?}")]
    MissingOutside(&'static str),
    #[error("label {0:?} appears more than once")]
    DuplicateLabel(String),
    #[error("label set has {0:?} without the matching B- label")]
    OrphanInside(String),
    #[error("sequence is empty")]
    EmptySequence,
    #[error("sequence has {features} feature maps but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("label {label:?} at position {position} is not valid BIO here")]
    InvalidBio { label: String, position: usize },
    #[error("label {0:?} is not in the model's label set")]
    UnknownLabel(String),
    #[error("no features observed in the training data")]
    EmptyFeatureSpace,
    #[error("feature dictionary has duplicate entry {0:?}")]
    DuplicateFeature(String),
    #[error("weight matrix size mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weights must be finite")]
    NonFiniteWeight,
    #[error("bad hyperparameter: {0}")]
    BadHyperparams(String),
    #[error("training data is empty")]
    NoTrainingData,
    #[error("model io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model format error: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
}

/// Ordered label inventory. Index 0 of [`LabelSet::bio_default`] is `"O"`,
/// which the Viterbi tie-break relies on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    /// Builds a label set, enforcing that `"O"` is present, labels are
    /// unique, and every `I-x` has a matching `B-x`.
    pub fn new(labels: Vec<String>) -> Result<LabelSet, CrfError> {
        if labels.is_empty() {
            return Err(CrfError::EmptyLabelSet);
        }
        if !labels.iter().any(|l| l == "O") {
            return Err(CrfError::MissingOutside("O"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for label in &labels {
            if !seen.insert(label.clone()) {
                return Err(CrfError::DuplicateLabel(label.clone()));
            }
        }
        for label in &labels {
            if let Some(field) = label.strip_prefix("I-") {
                let begin = format!("B-{field}");
                if !labels.contains(&begin) {
                    return Err(CrfError::OrphanInside(label.clone()));
                }
            }
        }
        Ok(LabelSet { labels })
    }

    /// The 15-label BIO set: `O` first, then `B-`/`I-` per field.
    pub fn bio_default() -> LabelSet {
        let mut labels = vec!["O".to_string()];
        for field in FieldKind::ALL {
            labels.push(format!("B-{field}"));
            labels.push(format!("I-{field}"));
        }
        LabelSet { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// For `I-x`, the index of `B-x`; used by the constrained decoder.
    fn begin_of(&self, index: usize) -> Option<usize> {
        self.labels[index]
            .strip_prefix("I-")
            .and_then(|field| self.index_of(&format!("B-{field}")))
    }
}

/// Dense mapping from `name=value` feature strings to column indices.
/// Frozen once built; unseen features at inference are simply ignored.
#[derive(Debug, Clone, Default)]
pub struct FeatureDict {
    map: HashMap<String, u32>,
    names: Vec<String>,
}

impl FeatureDict {
    /// Collects every feature string of the training data, in first-seen
    /// order (sequence order, position order, map order), so the same data
    /// always yields the same dictionary.
    pub fn from_sequences(data: &[LabeledSequence]) -> FeatureDict {
        let mut dict = FeatureDict::default();
        for seq in data {
            for fmap in &seq.features {
                for name in fmap.feature_strings() {
                    dict.intern(&name);
                }
            }
        }
        dict
    }

    pub fn from_names(names: Vec<String>) -> Result<FeatureDict, CrfError> {
        let mut dict = FeatureDict::default();
        for name in names {
            if dict.map.contains_key(&name) {
                return Err(CrfError::DuplicateFeature(name));
            }
            dict.intern(&name);
        }
        Ok(dict)
    }

    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&idx) = self.map.get(name) {
            return idx;
        }
        let idx = self.names.len() as u32;
        self.map.insert(name.to_string(), idx);
        self.names.push(name.to_string());
        idx
    }

    pub fn lookup(&self, name: &str) -> Option<u32> {
        self.map.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Training hyperparameters. The learning rate follows inverse-time decay:
/// `rate_e = learning_rate / (1 + decay * epoch)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            l2: 0.1,
            epochs: 50,
            batch_size: 8,
            learning_rate: 0.1,
            decay: 0.05,
            seed: 42,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), CrfError> {
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(CrfError::BadHyperparams(format!("l2 = {}", self.l2)));
        }
        if self.epochs == 0 {
            return Err(CrfError::BadHyperparams("epochs = 0".into()));
        }
        if self.batch_size == 0 {
            return Err(CrfError::BadHyperparams("batch_size = 0".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(CrfError::BadHyperparams(format!(
                "learning_rate = {}",
                self.learning_rate
            )));
        }
        if !(self.decay >= 0.0 && self.decay.is_finite()) {
            return Err(CrfError::BadHyperparams(format!("decay = {}", self.decay)));
        }
        Ok(())
    }
}

/// One training/evaluation unit: per-token feature maps plus BIO labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    features: Vec<FeatureMap>,
    labels: Vec<String>,
}

impl LabeledSequence {
    /// Validates lengths and BIO structure (`I-x` only after `B-x`/`I-x`).
    pub fn new(features: Vec<FeatureMap>, labels: Vec<String>) -> Result<LabeledSequence, CrfError> {
        if features.is_empty() {
            return Err(CrfError::EmptySequence);
        }
        if features.len() != labels.len() {
            return Err(CrfError::LengthMismatch {
                features: features.len(),
                labels: labels.len(),
            });
        }
        let mut prev: Option<&str> = None;
        for (i, label) in labels.iter().enumerate() {
            if let Some(field) = label.strip_prefix("I-") {
                let ok = prev
                    .map(|p| p == format!("B-{field}") || p == format!("I-{field}"))
                    .unwrap_or(false);
                if !ok {
                    return Err(CrfError::InvalidBio { label: label.clone(), position: i });
                }
            }
            prev = Some(label);
        }
        Ok(LabeledSequence { features, labels })
    }

    pub fn features(&self) -> &[FeatureMap] {
        &self.features
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Decoding mode: free argmax, or a hard mask that forbids `I-x` after
/// anything other than `B-x`/`I-x` (and at the sequence start).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BioConstraint {
    #[default]
    Off,
    Strict,
}

/// Gradient of the sequence log-likelihood, shaped like the weights.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub emission: Vec<f64>,
    pub transition: Vec<f64>,
}

/// A trained (or hand-constructed) linear-chain CRF.
///
/// Weight layout: `emission[f * L + y]` for feature `f` and label `y`;
/// `transition[a * L + b]` for a transition from label `a` to label `b`.
#[derive(Debug, Clone)]
pub struct CrfModel {
    labels: LabelSet,
    dict: FeatureDict,
    emission: Vec<f64>,
    transition: Vec<f64>,
    hyper: Hyperparams,
    config_hash: Option<String>,
}

/// On-disk JSON model representation.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
    labels: Vec<String>,
    features: Vec<String>,
    emission: Vec<f64>,
    transition: Vec<f64>,
    hyperparams: Hyperparams,
}

const MODEL_FORMAT_VERSION: u32 = 1;

impl CrfModel {
    /// Assembles a model from raw parts, checking shapes and finiteness.
    pub fn from_parts(
        labels: LabelSet,
        dict: FeatureDict,
        emission: Vec<f64>,
        transition: Vec<f64>,
        hyper: Hyperparams,
    ) -> Result<CrfModel, CrfError> {
        let l = labels.len();
        let expected_emission = dict.len() * l;
        if emission.len() != expected_emission {
            return Err(CrfError::DimensionMismatch {
                expected: expected_emission,
                got: emission.len(),
            });
        }
        if transition.len() != l * l {
            return Err(CrfError::DimensionMismatch { expected: l * l, got: transition.len() });
        }
        if emission.iter().chain(&transition).any(|w| !w.is_finite()) {
            return Err(CrfError::NonFiniteWeight);
        }
        Ok(CrfModel { labels, dict, emission, transition, hyper, config_hash: None })
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.labels
    }

    pub fn dict(&self) -> &FeatureDict {
        &self.dict
    }

    pub fn emission_weights(&self) -> &[f64] {
        &self.emission
    }

    pub fn transition_weights(&self) -> &[f64] {
        &self.transition
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn config_hash(&self) -> Option<&str> {
        self.config_hash.as_deref()
    }

    pub fn set_config_hash(&mut self, hash: Option<String>) {
        self.config_hash = hash;
    }

    /// (sum, min, max) over all weights; handy for determinism checks.
    pub fn weight_summary(&self) -> (f64, f64, f64) {
        let all = self.emission.iter().chain(&self.transition);
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &w in all {
            sum += w;
            min = min.min(w);
            max = max.max(w);
        }
        (sum, min, max)
    }

    /// Maps feature maps to dictionary indices; unseen features drop out.
    pub(crate) fn index_features(&self, features: &[FeatureMap]) -> Vec<Vec<u32>> {
        features
            .iter()
            .map(|fmap| {
                fmap.feature_strings()
                    .filter_map(|name| self.dict.lookup(&name))
                    .collect()
            })
            .collect()
    }

    fn gold_indices(&self, labels: &[String]) -> Result<Vec<usize>, CrfError> {
        labels
            .iter()
            .map(|l| self.labels.index_of(l).ok_or_else(|| CrfError::UnknownLabel(l.clone())))
            .collect()
    }

    /// Unnormalized path score of `labels` given `features`.
    pub fn score(&self, features: &[FeatureMap], labels: &[String]) -> Result<f64, CrfError> {
        if features.is_empty() {
            return Err(CrfError::EmptySequence);
        }
        if features.len() != labels.len() {
            return Err(CrfError::LengthMismatch {
                features: features.len(),
                labels: labels.len(),
            });
        }
        let active = self.index_features(features);
        let gold = self.gold_indices(labels)?;
        let l = self.labels.len();
        let emit = emission_scores(&self.emission, l, &active);
        Ok(path_score(&emit, &self.transition, l, &gold))
    }

    /// `log p(labels | features)` via the log-space forward algorithm.
    pub fn sequence_log_likelihood(&self, seq: &LabeledSequence) -> Result<f64, CrfError> {
        if seq.is_empty() {
            return Err(CrfError::EmptySequence);
        }
        let active = self.index_features(seq.features());
        let gold = self.gold_indices(seq.labels())?;
        let l = self.labels.len();
        let emit = emission_scores(&self.emission, l, &active);
        let (_, log_z) = forward(&emit, &self.transition, l);
        Ok(path_score(&emit, &self.transition, l, &gold) - log_z)
    }

    /// Gradient of [`Self::sequence_log_likelihood`] with respect to every
    /// weight: empirical minus expected feature counts.
    pub fn gradient(&self, seq: &LabeledSequence) -> Result<Gradient, CrfError> {
        if seq.is_empty() {
            return Err(CrfError::EmptySequence);
        }
        let active = self.index_features(seq.features());
        let gold = self.gold_indices(seq.labels())?;
        let l = self.labels.len();
        let mut g_emission = vec![0.0; self.emission.len()];
        let mut g_transition = vec![0.0; self.transition.len()];
        accumulate_gradient(
            &active,
            &gold,
            &self.emission,
            &self.transition,
            l,
            &mut g_emission,
            &mut g_transition,
        );
        Ok(Gradient { emission: g_emission, transition: g_transition })
    }

    /// Per-position label marginals `p(y_t = y | x)`, row-major `n x L`.
    pub fn marginals(&self, features: &[FeatureMap]) -> Result<Vec<f64>, CrfError> {
        if features.is_empty() {
            return Err(CrfError::EmptySequence);
        }
        let active = self.index_features(features);
        let l = self.labels.len();
        let emit = emission_scores(&self.emission, l, &active);
        Ok(forward_backward::position_marginals(&emit, &self.transition, l))
    }

    /// Highest-scoring label path. Ties break toward the lowest label
    /// index at each backtrack step.
    pub fn viterbi(
        &self,
        features: &[FeatureMap],
        constraint: BioConstraint,
    ) -> Result<Vec<String>, CrfError> {
        if features.is_empty() {
            return Err(CrfError::EmptySequence);
        }
        let active = self.index_features(features);
        let l = self.labels.len();
        let emit = emission_scores(&self.emission, l, &active);
        let path = match constraint {
            BioConstraint::Off => viterbi::decode(&emit, &self.transition, l, None),
            BioConstraint::Strict => {
                let (masked, init) = self.strict_masks();
                viterbi::decode(&emit, &masked, l, Some(&init))
            }
        };
        Ok(path.into_iter().map(|y| self.labels.label(y).to_string()).collect())
    }

    /// Transition matrix with invalid BIO moves set to `-inf`, plus the
    /// initial-position mask.
    fn strict_masks(&self) -> (Vec<f64>, Vec<f64>) {
        let l = self.labels.len();
        let mut masked = self.transition.clone();
        let mut init = vec![0.0; l];
        for y in 0..l {
            if let Some(begin) = self.labels.begin_of(y) {
                init[y] = f64::NEG_INFINITY;
                for a in 0..l {
                    if a != begin && a != y {
                        masked[a * l + y] = f64::NEG_INFINITY;
                    }
                }
            }
        }
        (masked, init)
    }

    /// Serializes to versioned JSON. Weights survive the round trip
    /// bit-exactly.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            config_hash: self.config_hash.clone(),
            labels: self.labels.labels.clone(),
            features: self.dict.names.clone(),
            emission: self.emission.clone(),
            transition: self.transition.clone(),
            hyperparams: self.hyper.clone(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<CrfModel, CrfError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(CrfError::UnsupportedVersion(file.format_version));
        }
        let labels = LabelSet::new(file.labels)?;
        let dict = FeatureDict::from_names(file.features)?;
        let mut model =
            CrfModel::from_parts(labels, dict, file.emission, file.transition, file.hyperparams)?;
        model.config_hash = file.config_hash;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), CrfError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<CrfModel, CrfError> {
        CrfModel::from_json(&std::fs::read_to_string(path)?)
    }

    /// Trains a model with mini-batch SGD; see [`train`](crate::crf::train).
    pub fn train(
        labels: LabelSet,
        data: &[LabeledSequence],
        hyper: Hyperparams,
    ) -> Result<CrfModel, CrfError> {
        train::train(labels, data, hyper)
    }
}

impl fmt::Display for CrfModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "crf: {} labels, {} features, l2={}, epochs={}",
            self.labels.len(),
            self.dict.len(),
            self.hyper.l2,
            self.hyper.epochs
        )
    }
}
