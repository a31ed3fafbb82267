//! Linear-chain CRF over the five slot tags with a logistic sentence
//! classifier sharing the same sparse features. Both heads are trained
//! jointly on `crf_nll + lambda * bce + l2/2 * |w|^2`.

mod crf;
mod model_file;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::targeting::TagLabel;

pub use crf::{
    forward_backward, log_partition, neg_log_likelihood_and_gradient, score_path, viterbi_decode,
    Marginals,
};
pub use model_file::{read_model, write_model, MODEL_VERSION};
pub use train::{predict, train, EpochRecord, Prediction, TrainReport};

pub(crate) use crf::{sample_loss_and_gradient, sample_objective};

pub const NUM_LABELS: usize = TagLabel::COUNT;

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("{labels} labels for {tokens} tokens")]
    LengthMismatch { labels: usize, tokens: usize },
    #[error("feature index {index} at position {position} exceeds feature_dim {dim}")]
    FeatureOutOfRange {
        index: u32,
        position: usize,
        dim: usize,
    },
    #[error("non-finite {what} at position {position}")]
    NonFinite { what: &'static str, position: usize },
    #[error("gold labels violate BIO order at {0}")]
    InvalidGold(usize),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
    },
    #[error("sample {sentence_id}#{sample_index} has no gold labels")]
    Unlabeled {
        sentence_id: String,
        sample_index: usize,
    },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("model/encoder mismatch: {0}")]
    Mismatch(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("model file io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Encode(#[from] crate::encode::EncodeError),
}

/// Weight blocks in a flat parameter vector, in this order:
/// emission `F x L` (row-major by feature), transition `L x L` (row = previous
/// label), start `L`, stop `L`, classifier `F` then its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub version: String,
    pub labels: Vec<TagLabel>,
    pub feature_dim: usize,
    pub dictionary_hash: String,
    weights: Vec<f64>,
}

/// Addresses one coordinate of the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Emission(usize, usize),
    Transition(usize, usize),
    Start(usize),
    Stop(usize),
    Classifier(usize),
    Bias,
}

impl CrfModel {
    pub fn zeros(feature_dim: usize, dictionary_hash: impl Into<String>) -> Self {
        CrfModel {
            version: MODEL_VERSION.to_string(),
            labels: TagLabel::ALL.to_vec(),
            feature_dim,
            dictionary_hash: dictionary_hash.into(),
            weights: vec![0.0; Self::param_count(feature_dim)],
        }
    }

    pub fn from_weights(
        feature_dim: usize,
        dictionary_hash: impl Into<String>,
        weights: Vec<f64>,
    ) -> Result<Self, TaggerError> {
        let want = Self::param_count(feature_dim);
        if weights.len() != want {
            return Err(TaggerError::Format(format!(
                "{} weights for feature_dim {feature_dim}, expected {want}",
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(TaggerError::Format(format!("non-finite weight at {i}")));
        }
        let mut m = CrfModel::zeros(feature_dim, dictionary_hash);
        m.weights = weights;
        Ok(m)
    }

    pub fn param_count(feature_dim: usize) -> usize {
        feature_dim * NUM_LABELS + NUM_LABELS * NUM_LABELS + 2 * NUM_LABELS + feature_dim + 1
    }

    pub fn num_params(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn index(&self, p: Param) -> usize {
        let f = self.feature_dim;
        let l = NUM_LABELS;
        let trans = f * l;
        let start = trans + l * l;
        let stop = start + l;
        let cls = stop + l;
        match p {
            Param::Emission(feat, y) => feat * l + y,
            Param::Transition(a, b) => trans + a * l + b,
            Param::Start(y) => start + y,
            Param::Stop(y) => stop + y,
            Param::Classifier(feat) => cls + feat,
            Param::Bias => cls + f,
        }
    }

    pub fn get(&self, p: Param) -> f64 {
        self.weights[self.index(p)]
    }

    pub fn set(&mut self, p: Param, v: f64) {
        let i = self.index(p);
        self.weights[i] = v;
    }

    #[inline]
    pub(crate) fn emission_row(&self, feat: u32) -> &[f64] {
        let s = feat as usize * NUM_LABELS;
        &self.weights[s..s + NUM_LABELS]
    }

    #[inline]
    pub(crate) fn transition(&self, a: usize, b: usize) -> f64 {
        self.weights[self.feature_dim * NUM_LABELS + a * NUM_LABELS + b]
    }

    #[inline]
    pub(crate) fn start(&self, y: usize) -> f64 {
        self.weights[self.index(Param::Start(y))]
    }

    #[inline]
    pub(crate) fn stop(&self, y: usize) -> f64 {
        self.weights[self.index(Param::Stop(y))]
    }

    /// Classifier logit for a pooled feature vector.
    pub fn classifier_logit(&self, pooled: &[u32]) -> f64 {
        let base = self.index(Param::Classifier(0));
        let mut z = self.weights[self.index(Param::Bias)];
        for &f in pooled {
            z += self.weights[base + f as usize];
        }
        z
    }

    pub fn classifier_probability(&self, pooled: &[u32]) -> f64 {
        sigmoid(self.classifier_logit(pooled))
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// longer samples are truncated for training, with a warning
    pub max_seq_len: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    /// weight of the classifier loss
    pub classifier_loss_weight: f64,
    pub seed: u64,
    /// stop after this many epochs without dev improvement; `None` runs all
    pub patience: Option<usize>,
    pub adagrad_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 12,
            max_seq_len: 100,
            learning_rate: 0.1,
            l2_lambda: 1e-4,
            classifier_loss_weight: 1.0,
            seed: 13,
            patience: None,
            adagrad_epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TaggerError> {
        let bad = |m: &str| Err(TaggerError::Config(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.max_seq_len == 0 {
            return bad("max_seq_len must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad("l2_lambda must be non-negative");
        }
        if !(self.classifier_loss_weight >= 0.0 && self.classifier_loss_weight.is_finite()) {
            return bad("classifier_loss_weight must be non-negative");
        }
        if !(self.adagrad_epsilon > 0.0 && self.adagrad_epsilon.is_finite()) {
            return bad("adagrad_epsilon must be positive");
        }
        if self.patience == Some(0) {
            return bad("patience must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_layout_is_a_bijection() {
        let m = CrfModel::zeros(3, "h");
        let mut seen = vec![false; m.num_params()];
        let mut mark = |p| {
            let i = m.index(p);
            assert!(!seen[i], "{p:?}");
            seen[i] = true;
        };
        for f in 0..3 {
            for y in 0..NUM_LABELS {
                mark(Param::Emission(f, y));
            }
            mark(Param::Classifier(f));
        }
        for a in 0..NUM_LABELS {
            for b in 0..NUM_LABELS {
                mark(Param::Transition(a, b));
            }
            mark(Param::Start(a));
            mark(Param::Stop(a));
        }
        mark(Param::Bias);
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn stable_logistic_helpers() {
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!(softplus(-800.0) >= 0.0);
    }

    #[test]
    fn default_config_is_valid() {
        TrainConfig::default().validate().unwrap();
        let c = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
