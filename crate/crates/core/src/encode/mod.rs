//! Token encoders. The tagger only sees [`TokenFeatures`]; anything that can
//! turn a [`TargetSample`] into sparse binary feature indices can drive it.
//! [`SparseEncoder`] is the default: hand-written templates over the masked
//! tokens, the target position, coordination cues and optional syntax
//! channels.

mod dictionary;
mod features;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SyntaxChannels;
use crate::targeting::TargetSample;

pub use dictionary::{FeatureDictionary, UNK, UNK_INDEX};
pub use features::{feature_strings, FeatureStrings};

const ENCODER_HEADER: &str = "# defx-encoder v1 ";

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("dictionary is frozen")]
    Frozen,
    #[error("dictionary must be frozen before extraction")]
    NotFrozen,
    #[error("cannot fit a dictionary on an empty corpus")]
    EmptyCorpus,
    #[error("sample {sentence_id}#{sample_index}: syntax channel {channel} has length {got}, expected {want}")]
    SyntaxLength {
        sentence_id: String,
        sample_index: usize,
        channel: &'static str,
        got: usize,
        want: usize,
    },
    #[error("invalid encoder configuration: {0}")]
    Config(String),
    #[error("dictionary file: {0}")]
    Format(String),
}

/// Per-token sorted feature indices (implicit value 1.0) and the pooled
/// sentence vector for the classifier head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenFeatures {
    pub tokens: Vec<Vec<u32>>,
    pub pooled: Vec<u32>,
}

impl TokenFeatures {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Keeps the first `len` tokens; the pooled vector is left as is.
    pub fn truncate(&mut self, len: usize) {
        self.tokens.truncate(len);
    }
}

/// Template parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// context words at offsets ±1..=window
    pub window: usize,
    /// longest prefix/suffix template
    pub affix_len: usize,
    /// distances beyond this fall into the `far` bucket
    pub near_distance: usize,
    pub use_syntax: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            window: 2,
            affix_len: 3,
            near_distance: 5,
            use_syntax: true,
        }
    }
}

pub trait TokenEncoder: Send + Sync {
    fn feature_dim(&self) -> usize;
    fn encode(&self, sample: &TargetSample) -> Result<TokenFeatures, EncodeError>;
    /// Identifies the feature space; stored in model files.
    fn fingerprint(&self) -> String;
}

/// Maps template strings through a frozen dictionary.
pub fn extract_features(
    sample: &TargetSample,
    dict: &FeatureDictionary,
    syntax: Option<&SyntaxChannels>,
    config: &EncoderConfig,
) -> Result<TokenFeatures, EncodeError> {
    if !dict.is_frozen() {
        return Err(EncodeError::NotFrozen);
    }
    let strings = feature_strings(sample, syntax, config)?;
    let map = |fs: &[String]| -> Vec<u32> {
        let mut v: Vec<u32> = fs.iter().map(|f| dict.get(f)).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let tokens: Vec<Vec<u32>> = strings.tokens.iter().map(|fs| map(fs)).collect();
    let mut pooled: Vec<u32> = tokens.iter().flatten().copied().collect();
    pooled.extend(strings.sentence.iter().map(|f| dict.get(f)));
    pooled.sort_unstable();
    pooled.dedup();
    Ok(TokenFeatures { tokens, pooled })
}

/// Counts every template string over `samples` and freezes.
pub fn fit_dictionary(
    samples: &[TargetSample],
    min_count: usize,
    config: &EncoderConfig,
) -> Result<FeatureDictionary, EncodeError> {
    if samples.is_empty() {
        return Err(EncodeError::EmptyCorpus);
    }
    let mut dict = FeatureDictionary::new(min_count)?;
    for sample in samples {
        let strings = feature_strings(sample, sample.syntax.as_ref(), config)?;
        for f in strings.tokens.iter().flatten().chain(&strings.sentence) {
            dict.observe(f)?;
        }
    }
    dict.freeze();
    Ok(dict)
}

#[derive(Debug, Clone)]
pub struct SparseEncoder {
    pub dictionary: FeatureDictionary,
    pub config: EncoderConfig,
    fingerprint: String,
}

impl SparseEncoder {
    pub fn new(dictionary: FeatureDictionary, config: EncoderConfig) -> Result<Self, EncodeError> {
        if !dictionary.is_frozen() {
            return Err(EncodeError::NotFrozen);
        }
        let fingerprint = dictionary.fingerprint();
        Ok(SparseEncoder {
            dictionary,
            config,
            fingerprint,
        })
    }

    pub fn fit(
        samples: &[TargetSample],
        min_count: usize,
        config: EncoderConfig,
    ) -> Result<Self, EncodeError> {
        let dict = fit_dictionary(samples, min_count, &config)?;
        SparseEncoder::new(dict, config)
    }

    /// Template options as one JSON line, then the dictionary text.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let options = serde_json::to_string(&self.config)?;
        writeln!(w, "{ENCODER_HEADER}{options}")?;
        self.dictionary.write(w)
    }

    pub fn read<R: BufRead>(mut reader: R) -> Result<Self, EncodeError> {
        let mut line = String::new();
        reader
            .read_line(&mut line)
            .map_err(|e| EncodeError::Format(e.to_string()))?;
        let options = line
            .trim_end()
            .strip_prefix(ENCODER_HEADER)
            .ok_or_else(|| EncodeError::Format("not an encoder file (bad header)".into()))?;
        let config = serde_json::from_str(options)
            .map_err(|e| EncodeError::Format(format!("bad encoder options: {e}")))?;
        SparseEncoder::new(FeatureDictionary::read(reader)?, config)
    }
}

impl TokenEncoder for SparseEncoder {
    fn feature_dim(&self) -> usize {
        self.dictionary.len()
    }

    fn encode(&self, sample: &TargetSample) -> Result<TokenFeatures, EncodeError> {
        extract_features(
            sample,
            &self.dictionary,
            sample.syntax.as_ref(),
            &self.config,
        )
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}
