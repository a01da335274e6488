//! Run configuration: one TOML file (or defaults) with CLI overrides.
//!
//! The effective configuration is hashed and the hash embedded in model
//! files and evaluation reports, so any result can be traced back to the
//! exact settings that produced it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::crf::Hyperparams;
use crate::eval::SimilarityNorm;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),
}

/// Every tunable of the pipeline. All randomness flows from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub seed: u64,
    pub train_fraction: f64,
    pub threshold: f64,
    pub similarity: SimilarityNorm,
    pub visual: bool,
    pub strict_bio: bool,
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay: f64,
    pub synth_docs: usize,
    pub synth_noise: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 42,
            train_fraction: 0.7,
            threshold: 0.95,
            similarity: SimilarityNorm::Ratio,
            visual: false,
            strict_bio: false,
            l2: 0.1,
            epochs: 50,
            batch_size: 8,
            learning_rate: 0.1,
            decay: 0.05,
            synth_docs: 240,
            synth_noise: 0.08,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Config, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Config::from_toml_str(&text)
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            l2: self.l2,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            decay: self.decay,
            seed: self.seed,
        }
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let c = Config::default();
        assert_eq!(c.threshold, 0.95);
        assert_eq!(c.train_fraction, 0.7);
        assert_eq!(c.l2, 0.1);
        assert_eq!(c.epochs, 50);
        assert_eq!(c.batch_size, 8);
        assert_eq!(c.learning_rate, 0.1);
    }

    #[test]
    fn partial_toml_overrides() {
        let c = Config::from_toml_str("seed = 7\nvisual = true\n").unwrap();
        assert_eq!(c.seed, 7);
        assert!(c.visual);
        assert_eq!(c.threshold, 0.95);
        assert!(Config::from_toml_str("epochs = \"many\"").is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Config::default();
        let b = Config::default();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = Config { seed: 43, ..Config::default() };
        assert_ne!(a.hash(), c.hash());
    }
}
