//! Run configuration.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Name of the decode-score ranking feature.
pub const PARAPHRASER_FEATURE: &str = "paraphraser";
pub const SCORER_A: &str = "scorer_a";
pub const SCORER_B: &str = "scorer_b";

/// Linear weights for the ranking features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub paraphraser: f64,
    /// Weight per sentence-pair scorer, keyed by scorer name.
    pub scorers: BTreeMap<String, f64>,
}

impl Default for Weights {
    fn default() -> Self {
        Self { paraphraser: 0.02, scorers: BTreeMap::from([(SCORER_A.to_string(), 1.0), (SCORER_B.to_string(), 1.0)]) }
    }
}

impl Weights {
    pub fn scorer(&self, name: &str) -> f64 {
        self.scorers.get(name).copied().unwrap_or(0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            paraphraser: self.paraphraser * factor,
            scorers: self.scorers.iter().map(|(k, w)| (k.clone(), w * factor)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Number of substitutes to generate.
    pub k: usize,
    /// Number of source words after the target to look ahead over.
    pub lookahead_length: usize,
    pub top_n_eval: usize,
    pub weights: Weights,
    pub max_word_tokens: usize,
    pub features_enabled: BTreeSet<String>,
    /// Min-max normalize each feature across an instance's candidates before combining.
    pub normalize_features: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 50,
            lookahead_length: 2,
            top_n_eval: 10,
            weights: Weights::default(),
            max_word_tokens: 5,
            features_enabled: [PARAPHRASER_FEATURE, SCORER_A, SCORER_B].into_iter().map(String::from).collect(),
            normalize_features: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    TooSmall(&'static str),
    #[error("weight for {0:?} is not finite")]
    NonFiniteWeight(String),
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::TooSmall("k"));
        }
        if self.top_n_eval == 0 {
            return Err(ConfigError::TooSmall("top_n_eval"));
        }
        if self.max_word_tokens == 0 {
            return Err(ConfigError::TooSmall("max_word_tokens"));
        }
        if !self.weights.paraphraser.is_finite() {
            return Err(ConfigError::NonFiniteWeight(PARAPHRASER_FEATURE.into()));
        }
        if let Some((name, _)) = self.weights.scorers.iter().find(|(_, w)| !w.is_finite()) {
            return Err(ConfigError::NonFiniteWeight(name.clone()));
        }
        Ok(())
    }

    /// Stable digest over every field; keys cache entries.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn is_enabled(&self, feature: &str) -> bool {
        self.features_enabled.contains(feature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reported_hyperparameters() {
        let c = RunConfig::default();
        assert_eq!(c.k, 50);
        assert_eq!(c.lookahead_length, 2);
        assert_eq!(c.top_n_eval, 10);
        assert_eq!(c.weights.paraphraser, 0.02);
        assert_eq!(c.weights.scorer(SCORER_A), 1.0);
        assert_eq!(c.weights.scorer(SCORER_B), 1.0);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn hash_tracks_changes() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.lookahead_length = 3;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn validation_errors() {
        let c = RunConfig { k: 0, ..RunConfig::default() };
        assert_eq!(c.validate(), Err(ConfigError::TooSmall("k")));
        let mut c = RunConfig::default();
        c.weights.paraphraser = f64::NAN;
        assert!(c.validate().is_err());
    }
}
