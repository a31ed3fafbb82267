//! Shared fixtures for the criterion benches.

use defx::encode::{EncoderConfig, SparseEncoder, TokenEncoder};
use defx::synthetic::{generate, SyntheticConfig};
use defx::targeting::expand_targets;
use defx::{TargetSample, TokenFeatures};

/// Expanded samples from a synthetic corpus of `sentences` sentences.
pub fn samples(sentences: usize) -> Vec<TargetSample> {
    let corpus = generate(&SyntheticConfig {
        sentences,
        papers: (sentences / 50).max(1),
        seed: 11,
    });
    corpus.iter().flat_map(expand_targets).collect()
}

/// Samples, a fitted encoder and the encoded features.
pub fn encoded(sentences: usize) -> (Vec<TargetSample>, SparseEncoder, Vec<TokenFeatures>) {
    let s = samples(sentences);
    let enc = SparseEncoder::fit(&s, 1, EncoderConfig::default()).expect("non-empty corpus");
    let x = s.iter().map(|t| enc.encode(t).expect("encodes")).collect();
    (s, enc, x)
}
