use std::collections::HashSet;

use super::{AnnotatedSentence, CorpusStats};

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        (num as f64 / den as f64 * 100.0).round() / 100.0
    }
}

/// Term and definition onsets alternate T, D, T, D, ... in token order,
/// starting with a term and containing at least one definition. A term and a
/// definition starting on the same token order term first.
pub(crate) fn is_collated(s: &AnnotatedSentence) -> bool {
    let mut onsets: Vec<(usize, u8)> = s.symbols.iter().map(|t| (t.first_token(), 0)).collect();
    onsets.extend(
        s.links
            .iter()
            .filter_map(|l| l.definition.onset())
            .map(|o| (o, 1)),
    );
    onsets.sort_unstable();
    if onsets.first().map(|o| o.1) != Some(0) || !onsets.iter().any(|o| o.1 == 1) {
        return false;
    }
    onsets.windows(2).all(|w| w[0].1 != w[1].1)
}

/// Pairs of spans (definition-definition or definition-symbol) sharing at
/// least one token.
pub(crate) fn overlap_instances(s: &AnnotatedSentence) -> usize {
    let defs: Vec<HashSet<usize>> = s.links.iter().map(|l| l.definition.token_set()).collect();
    let mut count = 0;
    for i in 0..defs.len() {
        for j in i + 1..defs.len() {
            if !defs[i].is_disjoint(&defs[j]) {
                count += 1;
            }
        }
        for sym in &s.symbols {
            if sym.token_indices.iter().any(|t| defs[i].contains(t)) {
                count += 1;
            }
        }
    }
    count
}

/// Corpus-level counts over positive sentences (those with at least one
/// annotated symbol). `total_terms` counts every annotated symbol occurrence,
/// defined or not; `total_defs` counts definition spans (one per link).
pub fn compute_stats(corpus: &[AnnotatedSentence]) -> CorpusStats {
    let mut st = CorpusStats {
        positive_sentences: 0,
        total_terms: 0,
        terms_per_sentence: 0.0,
        total_defs: 0,
        defs_per_sentence: 0.0,
        equal_count_sentences: 0,
        collated_sentences: 0,
        overlap_instances: 0,
        overlap_sentences: 0,
    };
    for s in corpus.iter().filter(|s| !s.symbols.is_empty()) {
        st.positive_sentences += 1;
        st.total_terms += s.symbols.len();
        st.total_defs += s.links.len();
        if s.symbols.len() == s.links.len() {
            st.equal_count_sentences += 1;
        }
        if is_collated(s) {
            st.collated_sentences += 1;
        }
        let ov = overlap_instances(s);
        st.overlap_instances += ov;
        if ov > 0 {
            st.overlap_sentences += 1;
        }
    }
    st.terms_per_sentence = ratio(st.total_terms, st.positive_sentences);
    st.defs_per_sentence = ratio(st.total_defs, st.positive_sentences);
    st
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;

    #[test]
    fn single_collated_sentence() {
        let s = with_link(
            with_symbol(sentence("s", "SYMBOL is a vector"), "S1", &[0]),
            "S1",
            &[[3, 3]],
        );
        let st = compute_stats(&[s]);
        assert_eq!(st.positive_sentences, 1);
        assert_eq!(st.equal_count_sentences, 1);
        assert_eq!(st.collated_sentences, 1);
        assert_eq!(st.terms_per_sentence, 1.0);
    }

    #[test]
    fn respectively_is_not_collated() {
        // A , C and v denote X , Y and Z respectively
        let s = sentence("s", "A , C and v denote X , Y and Z respectively");
        let s = with_symbol(with_symbol(with_symbol(s, "A", &[0]), "C", &[2]), "v", &[4]);
        let s = with_link(
            with_link(with_link(s, "A", &[[6, 6]]), "C", &[[8, 8]]),
            "v",
            &[[10, 10]],
        );
        let st = compute_stats(&[s]);
        assert_eq!(st.equal_count_sentences, 1);
        assert_eq!(st.collated_sentences, 0);
    }

    #[test]
    fn nested_definitions_overlap() {
        // hidden representation at layer l : h ; input x : h0
        let s = sentence(
            "s",
            "h the hidden representation at layer l and h0 the input x",
        );
        let s = with_symbol(s, "h", &[0]);
        let s = with_symbol(s, "l", &[6]);
        let s = with_symbol(s, "h0", &[8]);
        let s = with_symbol(s, "x", &[11]);
        let s = with_link(s, "h", &[[2, 6]]);
        let s = with_link(s, "l", &[[5, 5]]);
        let s = with_link(s, "h0", &[[10, 11]]);
        let s = with_link(s, "x", &[[10, 10]]);
        // brute force: def pairs (h,l) (h0,x) + def/symbol pairs (h def ∋ l) (h0 def ∋ x)
        let st = compute_stats(&[s]);
        assert_eq!(st.overlap_instances, 4);
        assert_eq!(st.overlap_sentences, 1);
    }

    #[test]
    fn negatives_do_not_count() {
        let st = compute_stats(&[sentence("s", "nothing here")]);
        assert_eq!(st.positive_sentences, 0);
        assert_eq!(st.terms_per_sentence, 0.0);
    }
}
