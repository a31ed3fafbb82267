//! One sample per symbol: mask every symbol as `SYMBOL`, mark one as the
//! target, label that target's definition with BIO tags, and merge per-sample
//! predictions back into symbol/definition pairs.
//!
//! The target is carried as a position (and a per-token feature downstream)
//! rather than as inserted `</s>` marker tokens, so labels stay aligned with
//! tokens. [`render_tokens`] produces the marker form for export.

mod expand;
mod mask;
mod merge;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::corpus::SyntaxChannels;

pub use expand::{expand_targets, expand_targets_with, project_gold, project_gold_with};
pub use mask::{mask_symbols, MaskedSentence};
pub use merge::{merge_predictions, MergedDefinition};

pub const SYMBOL_TOKEN: &str = "SYMBOL";
pub const TARGET_MARKER: &str = "</s>SYMBOL</s>";

#[derive(Debug, Error)]
pub enum TargetingError {
    #[error("sample {sentence_id}#{sample_index}: {message}")]
    Sample {
        sentence_id: String,
        sample_index: usize,
        message: String,
    },
    #[error("{samples} samples but {predictions} predictions")]
    CountMismatch { samples: usize, predictions: usize },
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error("line {line}: malformed sample JSON: {message}")]
    Json { line: usize, message: String },
}

/// The five slot tags, in decoding tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TagLabel {
    O,
    BTerm,
    ITerm,
    BDef,
    IDef,
}

impl TagLabel {
    pub const ALL: [TagLabel; 5] = [
        TagLabel::O,
        TagLabel::BTerm,
        TagLabel::ITerm,
        TagLabel::BDef,
        TagLabel::IDef,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> TagLabel {
        Self::ALL[i]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TagLabel::O => "O",
            TagLabel::BTerm => "B-TERM",
            TagLabel::ITerm => "I-TERM",
            TagLabel::BDef => "B-DEF",
            TagLabel::IDef => "I-DEF",
        }
    }

    pub fn is_def(self) -> bool {
        matches!(self, TagLabel::BDef | TagLabel::IDef)
    }

    pub fn is_term(self) -> bool {
        matches!(self, TagLabel::BTerm | TagLabel::ITerm)
    }

    pub fn is_inside(self) -> bool {
        matches!(self, TagLabel::ITerm | TagLabel::IDef)
    }

    /// Whether `self` may directly follow `prev` (`None` = sequence start).
    pub fn may_follow(self, prev: Option<TagLabel>) -> bool {
        match self {
            TagLabel::ITerm => matches!(prev, Some(TagLabel::BTerm | TagLabel::ITerm)),
            TagLabel::IDef => matches!(prev, Some(TagLabel::BDef | TagLabel::IDef)),
            _ => true,
        }
    }
}

impl fmt::Display for TagLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TagLabel {
    type Err = TargetingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TagLabel::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| TargetingError::UnknownTag(s.to_string()))
    }
}

impl Serialize for TagLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for TagLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Index of the first position violating BIO order, if any.
pub fn first_bio_violation(labels: &[TagLabel]) -> Option<usize> {
    let mut prev = None;
    for (i, &l) in labels.iter().enumerate() {
        if !l.may_follow(prev) {
            return Some(i);
        }
        prev = Some(l);
    }
    None
}

pub fn is_valid_bio(labels: &[TagLabel]) -> bool {
    first_bio_violation(labels).is_none()
}

/// How non-target symbol tokens are labeled in gold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonTargetSymbols {
    /// `O`, unless inside the target's definition
    #[default]
    Outside,
    /// `B-TERM`, unless inside the target's definition
    Term,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub non_target_symbols: NonTargetSymbols,
}

/// A masked sentence with exactly one marked target (or none, when the
/// sentence has no symbols).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSample {
    pub sentence_id: String,
    pub sample_index: usize,
    pub tokens: Vec<String>,
    pub target: Option<usize>,
    pub symbol_positions: Vec<usize>,
    pub labels: Option<Vec<TagLabel>>,
    pub has_definition: bool,
    /// Original symbol id of the target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_symbol: Option<String>,
    /// Inclusive original token range behind each masked token. Empty means
    /// identity.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub origin: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syntax: Option<SyntaxChannels>,
}

impl TargetSample {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn origin_range(&self, masked: usize) -> [usize; 2] {
        self.origin.get(masked).copied().unwrap_or([masked, masked])
    }

    /// Number of symbols in the underlying sentence.
    pub fn symbol_count(&self) -> usize {
        self.symbol_positions.len()
    }

    fn fail(&self, message: String) -> TargetingError {
        TargetingError::Sample {
            sentence_id: self.sentence_id.clone(),
            sample_index: self.sample_index,
            message,
        }
    }

    pub fn validate(&self) -> Result<(), TargetingError> {
        if let Some(t) = self.target {
            if !self.symbol_positions.contains(&t) {
                return Err(self.fail(format!("target {t} is not a symbol position")));
            }
        }
        if self
            .symbol_positions
            .iter()
            .any(|&p| p >= self.tokens.len())
        {
            return Err(self.fail("symbol position out of range".into()));
        }
        if !self.origin.is_empty() && self.origin.len() != self.tokens.len() {
            return Err(self.fail("origin map length differs from tokens".into()));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.tokens.len() {
                return Err(self.fail(format!(
                    "{} labels for {} tokens",
                    labels.len(),
                    self.tokens.len()
                )));
            }
            if let Some(t) = self.target {
                if labels[t] != TagLabel::BTerm {
                    return Err(self.fail("target is not labeled B-TERM".into()));
                }
            }
            if let Some(i) = first_bio_violation(labels) {
                return Err(self.fail(format!("labels violate BIO order at {i}")));
            }
            if self.has_definition != labels.contains(&TagLabel::BDef) {
                return Err(self.fail("has_definition disagrees with labels".into()));
            }
        }
        Ok(())
    }
}

/// Tokens for display or export. With `markers`, the target becomes
/// `</s>SYMBOL</s>`.
pub fn render_tokens(sample: &TargetSample, markers: bool) -> Vec<String> {
    sample
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if markers && Some(i) == sample.target {
                TARGET_MARKER.to_string()
            } else {
                t.clone()
            }
        })
        .collect()
}

pub fn read_samples<R: BufRead>(reader: R) -> Result<Vec<TargetSample>, TargetingError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let json_err = |message: String| TargetingError::Json {
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| json_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: TargetSample =
            serde_json::from_str(&line).map_err(|e| json_err(e.to_string()))?;
        sample.validate()?;
        out.push(sample);
    }
    Ok(out)
}

/// One JSON object per line. With `markers`, the target token is written in
/// `</s>SYMBOL</s>` form.
pub fn write_samples<W: Write>(
    mut writer: W,
    samples: &[TargetSample],
    markers: bool,
) -> std::io::Result<()> {
    for s in samples {
        if markers {
            let mut shown = s.clone();
            shown.tokens = render_tokens(s, true);
            serde_json::to_writer(&mut writer, &shown)?;
        } else {
            serde_json::to_writer(&mut writer, s)?;
        }
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_strings_round_trip() {
        for t in TagLabel::ALL {
            assert_eq!(t.as_str().parse::<TagLabel>().unwrap(), t);
            assert_eq!(TagLabel::from_index(t.index()), t);
        }
        assert!("I-FOO".parse::<TagLabel>().is_err());
    }

    #[test]
    fn bio_validity() {
        use TagLabel::*;
        assert!(is_valid_bio(&[O, BTerm, ITerm, BDef, IDef, O]));
        assert_eq!(first_bio_violation(&[IDef]), Some(0));
        assert_eq!(first_bio_violation(&[O, BDef, O, IDef]), Some(3));
        assert_eq!(first_bio_violation(&[BTerm, IDef]), Some(1));
        assert!(is_valid_bio(&[]));
    }

    #[test]
    fn marker_rendering() {
        let s = TargetSample {
            sentence_id: "s".into(),
            sample_index: 0,
            tokens: vec!["SYMBOL".into(), "and".into(), "SYMBOL".into()],
            target: Some(2),
            symbol_positions: vec![0, 2],
            labels: None,
            has_definition: false,
            target_symbol: None,
            origin: vec![],
            syntax: None,
        };
        assert_eq!(render_tokens(&s, true), ["SYMBOL", "and", "</s>SYMBOL</s>"]);
        let mut buf = Vec::new();
        write_samples(&mut buf, &[s], false).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert!(line.contains("\"labels\":null"), "{line}");
        assert!(line.contains("\"target\":2"), "{line}");
    }
}
