use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedSentence, DefinitionSpan};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn new(matched: usize, predicted: usize, reference: usize) -> Prf {
        let ratio = |den: usize| {
            if den == 0 {
                if matched == 0 && predicted == 0 && reference == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                matched as f64 / den as f64
            }
        };
        let (p, r) = (ratio(predicted), ratio(reference));
        let f1 = if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        };
        Prf {
            precision: p,
            recall: r,
            f1,
        }
    }
}

/// Exact-match agreement, scored with each annotator as reference and the
/// mean of both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMatch {
    pub count_a: usize,
    pub count_b: usize,
    pub matched: usize,
    pub a_reference: Prf,
    pub b_reference: Prf,
    pub mean: Prf,
}

impl ExactMatch {
    fn new(count_a: usize, count_b: usize, matched: usize) -> Self {
        let a_reference = Prf::new(matched, count_b, count_a);
        let b_reference = Prf::new(matched, count_a, count_b);
        let mean = Prf {
            precision: (a_reference.precision + b_reference.precision) / 2.0,
            recall: (a_reference.recall + b_reference.recall) / 2.0,
            f1: (a_reference.f1 + b_reference.f1) / 2.0,
        };
        ExactMatch {
            count_a,
            count_b,
            matched,
            a_reference,
            b_reference,
            mean,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapCounts {
    pub contained: usize,
    pub overlapping_no_containment: usize,
    pub disjoint: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaaReport {
    pub sentences: usize,
    pub terms: ExactMatch,
    pub definitions: ExactMatch,
    /// definition pairs whose symbols match in both annotations
    pub paired_definitions: usize,
    /// mean of |A ∩ B| / |A| over pairs, as a fraction
    pub overlap_a_reference: f64,
    /// mean of |A ∩ B| / |B| over pairs
    pub overlap_b_reference: f64,
    pub mean_overlap: f64,
    pub non_exact_pairs: usize,
    pub counts: OverlapCounts,
    /// mean |A ∩ B| over pairs that overlap without containment
    pub mean_overlapping_words: f64,
}

fn multiset_matches<T: Ord + Clone>(a: &[T], b: &[T]) -> usize {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for x in a {
        *counts.entry(x.clone()).or_default() += 1;
    }
    let mut matched = 0;
    for x in b {
        if let Some(c) = counts.get_mut(x).filter(|c| **c > 0) {
            *c -= 1;
            matched += 1;
        }
    }
    matched
}

/// Agreement between two annotations of the same sentences.
pub fn compute_iaa(
    a: &[AnnotatedSentence],
    b: &[AnnotatedSentence],
) -> Result<IaaReport, EvalError> {
    let b_by_id: HashMap<&str, &AnnotatedSentence> = b.iter().map(|s| (s.id.as_str(), s)).collect();
    let a_ids: BTreeSet<&str> = a.iter().map(|s| s.id.as_str()).collect();
    if let Some(s) = b.iter().find(|s| !a_ids.contains(s.id.as_str())) {
        return Err(EvalError::SentenceMismatch(s.id.clone()));
    }

    let (mut terms_a, mut terms_b) = (Vec::new(), Vec::new());
    let (mut defs_a, mut defs_b) = (Vec::new(), Vec::new());
    let mut ratios_a = Vec::new();
    let mut ratios_b = Vec::new();
    let mut counts = OverlapCounts::default();
    let mut overlapping_words = Vec::new();

    for sa in a {
        let sb = *b_by_id
            .get(sa.id.as_str())
            .ok_or_else(|| EvalError::SentenceMismatch(sa.id.clone()))?;
        if sa.tokens != sb.tokens {
            return Err(EvalError::Tokenization(sa.id.clone()));
        }
        for s in &sa.symbols {
            terms_a.push((sa.id.as_str(), s.token_indices.clone()));
        }
        for s in &sb.symbols {
            terms_b.push((sb.id.as_str(), s.token_indices.clone()));
        }
        for l in &sa.links {
            defs_a.push((
                sa.id.as_str(),
                DefinitionSpan::normalized(l.definition.fragments.clone()).fragments,
            ));
        }
        for l in &sb.links {
            defs_b.push((
                sb.id.as_str(),
                DefinitionSpan::normalized(l.definition.fragments.clone()).fragments,
            ));
        }

        // pair definitions through symbols with identical tokens
        for link_a in &sa.links {
            let Some(sym_a) = sa.symbol(&link_a.symbol_id) else {
                continue;
            };
            let partner = sb
                .symbols
                .iter()
                .find(|s| s.token_indices == sym_a.token_indices);
            let Some(link_b) = partner.and_then(|s| sb.link_for(&s.id)) else {
                continue;
            };
            let ta = link_a.definition.token_set();
            let tb = link_b.definition.token_set();
            let inter = ta.intersection(&tb).count();
            ratios_a.push(inter as f64 / ta.len().max(1) as f64);
            ratios_b.push(inter as f64 / tb.len().max(1) as f64);
            if DefinitionSpan::normalized(link_a.definition.fragments.clone())
                == DefinitionSpan::normalized(link_b.definition.fragments.clone())
            {
                continue;
            }
            if ta.is_subset(&tb) || tb.is_subset(&ta) {
                counts.contained += 1;
            } else if inter > 0 {
                counts.overlapping_no_containment += 1;
                overlapping_words.push(inter as f64);
            } else {
                counts.disjoint += 1;
            }
        }
    }

    let mean = |xs: &[f64], empty: f64| {
        if xs.is_empty() {
            empty
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    let overlap_a = mean(&ratios_a, 1.0);
    let overlap_b = mean(&ratios_b, 1.0);
    Ok(IaaReport {
        sentences: a.len(),
        terms: ExactMatch::new(
            terms_a.len(),
            terms_b.len(),
            multiset_matches(&terms_a, &terms_b),
        ),
        definitions: ExactMatch::new(
            defs_a.len(),
            defs_b.len(),
            multiset_matches(&defs_a, &defs_b),
        ),
        paired_definitions: ratios_a.len(),
        overlap_a_reference: overlap_a,
        overlap_b_reference: overlap_b,
        mean_overlap: (overlap_a + overlap_b) / 2.0,
        non_exact_pairs: counts.contained + counts.overlapping_no_containment + counts.disjoint,
        counts,
        mean_overlapping_words: mean(&overlapping_words, 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::{sentence, with_link, with_symbol};

    fn annotated(def: [usize; 2]) -> AnnotatedSentence {
        let s = sentence("s1", "x is the first real valued input vector here");
        let s = with_symbol(s, "T1", &[0]);
        with_link(s, "T1", &[def])
    }

    #[test]
    fn self_agreement() {
        let a = vec![annotated([2, 5])];
        let r = compute_iaa(&a, &a).unwrap();
        assert_eq!(r.terms.mean.f1, 1.0);
        assert_eq!(r.definitions.mean.f1, 1.0);
        assert_eq!(r.mean_overlap, 1.0);
        assert_eq!(r.counts, OverlapCounts::default());
    }

    #[test]
    fn contained_span() {
        let a = vec![annotated([2, 5])];
        let b = vec![annotated([2, 7])];
        let r = compute_iaa(&a, &b).unwrap();
        assert_eq!(r.counts.contained, 1);
        assert_eq!(r.non_exact_pairs, 1);
        assert!((r.overlap_b_reference - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.overlap_a_reference, 1.0);
        assert_eq!(r.terms.mean.f1, 1.0);
        assert_eq!(r.definitions.mean.f1, 0.0);
    }

    #[test]
    fn overlapping_and_disjoint() {
        let r = compute_iaa(&[annotated([2, 5])], &[annotated([4, 7])]).unwrap();
        assert_eq!(r.counts.overlapping_no_containment, 1);
        assert_eq!(r.mean_overlapping_words, 2.0);
        let r = compute_iaa(&[annotated([1, 2])], &[annotated([5, 7])]).unwrap();
        assert_eq!(r.counts.disjoint, 1);
    }

    #[test]
    fn mismatched_inputs() {
        let a = vec![annotated([2, 5])];
        let mut b = a.clone();
        b[0].id = "other".into();
        assert!(matches!(
            compute_iaa(&a, &b),
            Err(EvalError::SentenceMismatch(_))
        ));
        let mut c = a.clone();
        c[0].tokens[1].text = "IS".into();
        assert!(matches!(
            compute_iaa(&a, &c),
            Err(EvalError::Tokenization(_))
        ));
    }
}
