use crate::corpus::{AnnotatedSentence, DefinitionSpan};

use super::mask::mask_symbols;
use super::{NonTargetSymbols, ProjectionConfig, TagLabel, TargetSample, TargetingError};

/// One sample per symbol in token order, or a single untargeted sample for a
/// sentence without symbols. Gold labels come from [`project_gold`].
pub fn expand_targets(sentence: &AnnotatedSentence) -> Vec<TargetSample> {
    expand_targets_with(sentence, &ProjectionConfig::default())
}

pub fn expand_targets_with(
    sentence: &AnnotatedSentence,
    config: &ProjectionConfig,
) -> Vec<TargetSample> {
    let masked = mask_symbols(sentence);
    let syntax = sentence.syntax.as_ref().map(|syn| {
        let picks: Vec<usize> = masked.origin.iter().map(|r| r[0]).collect();
        syn.select(&picks)
    });
    let base = TargetSample {
        sentence_id: sentence.id.clone(),
        sample_index: 0,
        tokens: masked.tokens.clone(),
        target: None,
        symbol_positions: masked.symbol_positions.clone(),
        labels: None,
        has_definition: false,
        target_symbol: None,
        origin: masked.origin.clone(),
        syntax,
    };

    if masked.symbol_positions.is_empty() {
        let mut s = base;
        s.labels = Some(vec![TagLabel::O; s.tokens.len()]);
        return vec![s];
    }

    masked
        .symbol_positions
        .iter()
        .zip(&masked.symbol_ids)
        .enumerate()
        .map(|(k, (&pos, id))| {
            let mut s = base.clone();
            s.sample_index = k;
            s.target = Some(pos);
            s.target_symbol = Some(id.clone());
            let labels =
                project_gold_with(&s, sentence, config).expect("target resolves by construction");
            s.has_definition = labels.contains(&TagLabel::BDef);
            s.labels = Some(labels);
            s
        })
        .collect()
}

pub fn project_gold(
    sample: &TargetSample,
    sentence: &AnnotatedSentence,
) -> Result<Vec<TagLabel>, TargetingError> {
    project_gold_with(sample, sentence, &ProjectionConfig::default())
}

/// Projects the target's definition onto the masked tokens. Each fragment
/// onset gets `B-DEF`; the target token always keeps `B-TERM`; a definition
/// continuing past the target restarts with `B-DEF`.
pub fn project_gold_with(
    sample: &TargetSample,
    sentence: &AnnotatedSentence,
    config: &ProjectionConfig,
) -> Result<Vec<TagLabel>, TargetingError> {
    let n = sample.tokens.len();
    let mut labels = vec![TagLabel::O; n];
    let Some(target) = sample.target else {
        return Ok(labels);
    };
    let fail = |message: String| TargetingError::Sample {
        sentence_id: sample.sentence_id.clone(),
        sample_index: sample.sample_index,
        message,
    };

    let mut to_masked = vec![usize::MAX; sentence.tokens.len()];
    for m in 0..n {
        let [a, b] = sample.origin_range(m);
        for slot in to_masked.get_mut(a..=b).into_iter().flatten() {
            *slot = m;
        }
    }
    let target_first = sample.origin_range(target)[0];
    let symbol = sentence
        .symbols
        .iter()
        .find(|s| match &sample.target_symbol {
            Some(id) => &s.id == id,
            None => s.first_token() == target_first,
        })
        .ok_or_else(|| fail("target does not resolve to a symbol".into()))?;

    if config.non_target_symbols == NonTargetSymbols::Term {
        for &p in &sample.symbol_positions {
            labels[p] = TagLabel::BTerm;
        }
    }

    if let Some(link) = sentence.link_for(&symbol.id) {
        let mut frags = Vec::with_capacity(link.definition.fragments.len());
        for &[s, e] in &link.definition.fragments {
            let (ms, me) = (to_masked.get(s).copied(), to_masked.get(e).copied());
            match (ms, me) {
                (Some(ms), Some(me)) if ms != usize::MAX && me != usize::MAX => {
                    frags.push([ms, me])
                }
                _ => return Err(fail(format!("fragment [{s},{e}] outside the sample"))),
            }
        }
        for [s, e] in DefinitionSpan::normalized(frags).fragments {
            labels[s] = TagLabel::BDef;
            for l in &mut labels[s + 1..=e] {
                *l = TagLabel::IDef;
            }
        }
    }

    labels[target] = TagLabel::BTerm;
    for i in 0..n {
        if labels[i] == TagLabel::IDef && (i == 0 || !labels[i - 1].is_def()) {
            labels[i] = TagLabel::BDef;
        }
    }
    Ok(labels)
}
