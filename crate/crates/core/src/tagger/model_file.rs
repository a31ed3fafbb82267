//! Model file: one JSON header line, then every weight as a little-endian
//! `f64`, blocks in header order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::targeting::TagLabel;

use super::{CrfModel, TaggerError, NUM_LABELS};

pub const MODEL_VERSION: &str = "defx-crf/1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: String,
    labels: Vec<TagLabel>,
    feature_dim: usize,
    dictionary_hash: String,
    encoding: String,
    blocks: Vec<(String, usize)>,
}

fn blocks(feature_dim: usize) -> Vec<(String, usize)> {
    vec![
        ("emission".into(), feature_dim * NUM_LABELS),
        ("transition".into(), NUM_LABELS * NUM_LABELS),
        ("start".into(), NUM_LABELS),
        ("stop".into(), NUM_LABELS),
        ("classifier".into(), feature_dim + 1),
    ]
}

pub fn write_model<W: Write>(model: &CrfModel, mut w: W) -> Result<(), TaggerError> {
    let header = Header {
        version: model.version.clone(),
        labels: model.labels.clone(),
        feature_dim: model.feature_dim,
        dictionary_hash: model.dictionary_hash.clone(),
        encoding: "f64-le".into(),
        blocks: blocks(model.feature_dim),
    };
    let line = serde_json::to_string(&header).map_err(|e| TaggerError::Format(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(model.num_params() * 8);
    for v in model.weights() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Reads a model; when `expected_hash` is given the stored dictionary hash
/// must match it.
pub fn read_model<R: BufRead>(
    mut r: R,
    expected_hash: Option<&str>,
) -> Result<CrfModel, TaggerError> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())
        .map_err(|e| TaggerError::Format(format!("bad header: {e}")))?;
    if header.version != MODEL_VERSION {
        return Err(TaggerError::Format(format!(
            "unsupported version {:?}",
            header.version
        )));
    }
    if header.labels != TagLabel::ALL {
        return Err(TaggerError::Format("unexpected label set".into()));
    }
    if header.encoding != "f64-le" || header.blocks != blocks(header.feature_dim) {
        return Err(TaggerError::Format("unexpected weight layout".into()));
    }
    if let Some(h) = expected_hash {
        if h != header.dictionary_hash {
            return Err(TaggerError::Mismatch(format!(
                "model was trained with dictionary {}, got {h}",
                header.dictionary_hash
            )));
        }
    }
    let n = CrfModel::param_count(header.feature_dim);
    let mut bytes = Vec::with_capacity(n * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * 8 {
        return Err(TaggerError::Format(format!(
            "expected {} weight bytes, found {}",
            n * 8,
            bytes.len()
        )));
    }
    let weights = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    CrfModel::from_weights(header.feature_dim, header.dictionary_hash, weights)
}
