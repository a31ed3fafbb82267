use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::DefinitionSpan;

use super::{first_bio_violation, TagLabel, TargetSample, TargetingError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedDefinition {
    pub sentence_id: String,
    pub symbol_id: String,
    pub definition: DefinitionSpan,
}

/// Turns per-sample label sequences into symbol/definition pairs in original
/// token indices. Each `B-DEF` starts a fragment. Targets without definition
/// tokens are dropped. Output follows sentence first appearance, then target
/// position.
pub fn merge_predictions(
    samples: &[TargetSample],
    predictions: &[Vec<TagLabel>],
) -> Result<Vec<MergedDefinition>, TargetingError> {
    if samples.len() != predictions.len() {
        return Err(TargetingError::CountMismatch {
            samples: samples.len(),
            predictions: predictions.len(),
        });
    }
    let mut sentence_rank: HashMap<&str, usize> = HashMap::new();
    let mut out: Vec<(usize, usize, MergedDefinition)> = Vec::new();

    for (sample, labels) in samples.iter().zip(predictions) {
        let fail = |message: String| TargetingError::Sample {
            sentence_id: sample.sentence_id.clone(),
            sample_index: sample.sample_index,
            message,
        };
        if labels.len() != sample.tokens.len() {
            return Err(fail(format!(
                "prediction has {} labels for {} tokens",
                labels.len(),
                sample.tokens.len()
            )));
        }
        if let Some(i) = first_bio_violation(labels) {
            return Err(fail(format!("prediction violates BIO order at {i}")));
        }
        let next_rank = sentence_rank.len();
        let rank = *sentence_rank
            .entry(sample.sentence_id.as_str())
            .or_insert(next_rank);
        let Some(target) = sample.target else {
            continue;
        };

        let mut fragments: Vec<[usize; 2]> = Vec::new();
        let mut run: Option<(usize, usize)> = None;
        for (i, &l) in labels.iter().enumerate() {
            match l {
                TagLabel::BDef => {
                    if let Some(r) = run.take() {
                        fragments.push([r.0, r.1]);
                    }
                    run = Some((i, i));
                }
                TagLabel::IDef => {
                    if let Some(r) = run.as_mut() {
                        r.1 = i;
                    }
                }
                _ => {
                    if let Some(r) = run.take() {
                        fragments.push([r.0, r.1]);
                    }
                }
            }
        }
        if let Some(r) = run {
            fragments.push([r.0, r.1]);
        }
        if fragments.is_empty() {
            continue;
        }
        let fragments = fragments
            .into_iter()
            .map(|[s, e]| [sample.origin_range(s)[0], sample.origin_range(e)[1]])
            .collect();
        let symbol_id = sample
            .target_symbol
            .clone()
            .ok_or_else(|| fail("target has no symbol id".into()))?;
        out.push((
            rank,
            target,
            MergedDefinition {
                sentence_id: sample.sentence_id.clone(),
                symbol_id,
                definition: DefinitionSpan::new(fragments),
            },
        ));
    }
    out.sort_by_key(|(rank, target, _)| (*rank, *target));
    Ok(out.into_iter().map(|(_, _, m)| m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;
    use crate::targeting::expand_targets;

    #[test]
    fn gold_predictions_reconstruct_links() {
        let s = with_symbol(
            with_symbol(
                sentence("s", "A and B denote x and y respectively"),
                "A",
                &[0],
            ),
            "B",
            &[2],
        );
        let s = with_link(with_link(s, "A", &[[4, 4]]), "B", &[[6, 6]]);
        let samples = expand_targets(&s);
        let preds: Vec<_> = samples.iter().map(|x| x.labels.clone().unwrap()).collect();
        let merged = merge_predictions(&samples, &preds).unwrap();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].symbol_id, "A");
        assert_eq!(merged[0].definition, s.links[0].definition);
        assert_eq!(merged[1].definition, s.links[1].definition);
    }

    #[test]
    fn all_outside_yields_nothing() {
        let s = with_symbol(sentence("s", "A is x"), "A", &[0]);
        let samples = expand_targets(&s);
        let merged = merge_predictions(&samples, &[vec![TagLabel::O; 3]]).unwrap();
        assert!(merged.is_empty());
    }

    #[test]
    fn mismatches_are_errors() {
        let s = with_symbol(sentence("s", "A is x"), "A", &[0]);
        let samples = expand_targets(&s);
        assert!(merge_predictions(&samples, &[]).is_err());
        assert!(merge_predictions(&samples, &[vec![TagLabel::O; 2]]).is_err());
        let bad = vec![TagLabel::BTerm, TagLabel::O, TagLabel::IDef];
        assert!(merge_predictions(&samples, &[bad]).is_err());
    }
}
