//! Canonical sentence data model and everything that reads, checks or
//! summarizes it.
//!
//! Storage is token-index based. Tokens keep their character offsets into the
//! sentence text so standoff offsets stay recoverable.

mod brat;
mod jsonl;
mod lint;
mod mine;
mod split;
mod stats;
mod tokenize;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use brat::{load_brat, parse_brat};
pub use jsonl::{load_jsonl, read_jsonl, save_jsonl, write_jsonl};
pub use lint::{lint_annotations, LintConfig, LintKind, LintWarning};
pub use mine::{mine_coordination, CoordinationCount};
pub use split::{split_corpus, CorpusSplit, SplitConfig, SplitMode};
pub use stats::compute_stats;
pub use tokenize::{PunctTokenizer, Tokenizer, WhitespaceTokenizer};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },
    #[error("sentence {sentence}: {message}")]
    Invariant { sentence: String, message: String },
    #[error("{file}: offset {offset} is not on a token boundary")]
    Boundary { file: String, offset: usize },
    #[error("{file}:{line}: {message}")]
    Brat {
        file: String,
        line: usize,
        message: String,
    },
    #[error("split: {0}")]
    Split(String),
}

/// One token of a sentence. Offsets count Unicode scalar values, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    #[serde(rename = "start")]
    pub char_start: usize,
    #[serde(rename = "end")]
    pub char_end: usize,
}

impl Token {
    pub fn new(text: impl Into<String>, char_start: usize, char_end: usize) -> Self {
        Token {
            text: text.into(),
            char_start,
            char_end,
        }
    }
}

/// A mathematical symbol covering a contiguous run of tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolOccurrence {
    pub id: String,
    #[serde(rename = "tokens")]
    pub token_indices: Vec<usize>,
}

impl SymbolOccurrence {
    pub fn first_token(&self) -> usize {
        self.token_indices[0]
    }

    pub fn last_token(&self) -> usize {
        self.token_indices[self.token_indices.len() - 1]
    }
}

/// A possibly discontinuous definition: inclusive `[start, end]` token ranges,
/// sorted and pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DefinitionSpan {
    pub fragments: Vec<[usize; 2]>,
}

impl DefinitionSpan {
    pub fn new(fragments: Vec<[usize; 2]>) -> Self {
        DefinitionSpan { fragments }
    }

    pub fn contiguous(start: usize, end: usize) -> Self {
        DefinitionSpan {
            fragments: vec![[start, end]],
        }
    }

    /// All covered token indices in increasing order.
    pub fn token_indices(&self) -> Vec<usize> {
        self.fragments.iter().flat_map(|&[s, e]| s..=e).collect()
    }

    pub fn token_set(&self) -> HashSet<usize> {
        self.fragments.iter().flat_map(|&[s, e]| s..=e).collect()
    }

    pub fn len(&self) -> usize {
        self.fragments.iter().map(|&[s, e]| e - s + 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn onset(&self) -> Option<usize> {
        self.fragments.first().map(|f| f[0])
    }

    /// Sorts fragments and fuses any that overlap. Adjacent fragments stay
    /// separate.
    pub fn normalized(mut fragments: Vec<[usize; 2]>) -> Self {
        fragments.sort_unstable();
        let mut out: Vec<[usize; 2]> = Vec::with_capacity(fragments.len());
        for [s, e] in fragments {
            match out.last_mut() {
                Some(last) if s <= last[1] => last[1] = last[1].max(e),
                _ => out.push([s, e]),
            }
        }
        DefinitionSpan { fragments: out }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolDefLink {
    pub symbol_id: String,
    #[serde(rename = "fragments")]
    pub definition: DefinitionSpan,
}

/// Optional pre-computed per-token syntax channels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxChannels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dep: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abbr: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ent: Option<Vec<bool>>,
}

impl SyntaxChannels {
    fn lengths(&self) -> impl Iterator<Item = (&'static str, usize)> + '_ {
        [
            ("pos", self.pos.as_ref().map(Vec::len)),
            ("dep", self.dep.as_ref().map(Vec::len)),
            ("abbr", self.abbr.as_ref().map(Vec::len)),
            ("ent", self.ent.as_ref().map(Vec::len)),
        ]
        .into_iter()
        .filter_map(|(name, len)| len.map(|l| (name, l)))
    }

    /// Channels re-indexed by `picks`, one original token index per output
    /// position.
    pub fn select(&self, picks: &[usize]) -> SyntaxChannels {
        fn pick<T: Clone>(v: &Option<Vec<T>>, picks: &[usize]) -> Option<Vec<T>> {
            v.as_ref()
                .map(|v| picks.iter().map(|&i| v[i].clone()).collect())
        }
        SyntaxChannels {
            pos: pick(&self.pos, picks),
            dep: pick(&self.dep, picks),
            abbr: pick(&self.abbr, picks),
            ent: pick(&self.ent, picks),
        }
    }

    pub fn truncate(&mut self, len: usize) {
        if let Some(v) = self.pos.as_mut() {
            v.truncate(len);
        }
        if let Some(v) = self.dep.as_mut() {
            v.truncate(len);
        }
        if let Some(v) = self.abbr.as_mut() {
            v.truncate(len);
        }
        if let Some(v) = self.ent.as_mut() {
            v.truncate(len);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub id: String,
    pub paper_id: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub symbols: Vec<SymbolOccurrence>,
    pub links: Vec<SymbolDefLink>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syntax: Option<SyntaxChannels>,
}

impl AnnotatedSentence {
    pub fn symbol(&self, id: &str) -> Option<&SymbolOccurrence> {
        self.symbols.iter().find(|s| s.id == id)
    }

    pub fn link_for(&self, symbol_id: &str) -> Option<&SymbolDefLink> {
        self.links.iter().find(|l| l.symbol_id == symbol_id)
    }

    /// Symbols ordered by their first token.
    pub fn symbols_in_order(&self) -> Vec<&SymbolOccurrence> {
        let mut v: Vec<_> = self.symbols.iter().collect();
        v.sort_by_key(|s| s.first_token());
        v
    }

    /// Checks every data-model invariant, naming the first one violated.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |message: String| {
            Err(CorpusError::Invariant {
                sentence: self.id.clone(),
                message,
            })
        };
        let n = self.tokens.len();
        let mut prev_end = 0usize;
        for (i, t) in self.tokens.iter().enumerate() {
            if t.char_start >= t.char_end {
                return fail(format!("token {i} has empty or inverted offsets"));
            }
            if i > 0 && t.char_start < prev_end {
                return fail(format!("token {i} overlaps or precedes token {}", i - 1));
            }
            prev_end = t.char_end;
        }

        let mut ids = HashSet::new();
        let mut claimed = vec![false; n];
        for s in &self.symbols {
            if !ids.insert(s.id.as_str()) {
                return fail(format!("duplicate symbol id {}", s.id));
            }
            if s.token_indices.is_empty() {
                return fail(format!("symbol {} covers no tokens", s.id));
            }
            for (k, &ti) in s.token_indices.iter().enumerate() {
                if ti >= n {
                    return fail(format!("symbol {} token {ti} out of range", s.id));
                }
                if k > 0 && ti != s.token_indices[k - 1] + 1 {
                    return fail(format!("symbol {} tokens are not contiguous", s.id));
                }
                if claimed[ti] {
                    return fail(format!("symbol {} shares token {ti}", s.id));
                }
                claimed[ti] = true;
            }
        }

        let mut linked = HashSet::new();
        for l in &self.links {
            if !ids.contains(l.symbol_id.as_str()) {
                return fail(format!("link references unknown symbol {}", l.symbol_id));
            }
            if !linked.insert(l.symbol_id.as_str()) {
                return fail(format!("symbol {} has more than one link", l.symbol_id));
            }
            let frags = &l.definition.fragments;
            if frags.is_empty() {
                return fail(format!("link for {} has no fragments", l.symbol_id));
            }
            for (k, &[s, e]) in frags.iter().enumerate() {
                if s > e || e >= n {
                    return fail(format!(
                        "link for {} fragment [{s},{e}] out of token range",
                        l.symbol_id
                    ));
                }
                if k > 0 && s <= frags[k - 1][1] {
                    return fail(format!(
                        "link for {} fragments unsorted or overlapping",
                        l.symbol_id
                    ));
                }
            }
        }

        if let Some(syn) = &self.syntax {
            for (name, len) in syn.lengths() {
                if len != n {
                    return fail(format!(
                        "syntax channel {name} has length {len}, expected {n}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Dataset-level counts in the layout of a corpus comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub positive_sentences: usize,
    pub total_terms: usize,
    pub terms_per_sentence: f64,
    pub total_defs: usize,
    pub defs_per_sentence: f64,
    pub equal_count_sentences: usize,
    pub collated_sentences: usize,
    pub overlap_instances: usize,
    pub overlap_sentences: usize,
}

impl CorpusStats {
    pub fn to_table(&self) -> String {
        let pct = |n: usize| {
            if self.positive_sentences == 0 {
                0.0
            } else {
                100.0 * n as f64 / self.positive_sentences as f64
            }
        };
        format!(
            "positive sentences  {}\n\
             total terms         {} ({:.2})\n\
             total defs          {} ({:.2})\n\
             equal counts        {} ({:.0}%)\n\
             collated            {} ({:.0}%)\n\
             overlap instances   {} in {} sentences\n",
            self.positive_sentences,
            self.total_terms,
            self.terms_per_sentence,
            self.total_defs,
            self.defs_per_sentence,
            self.equal_count_sentences,
            pct(self.equal_count_sentences),
            self.collated_sentences,
            pct(self.collated_sentences),
            self.overlap_instances,
            self.overlap_sentences,
        )
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Builds a sentence from whitespace-separated text.
    pub fn sentence(id: &str, text: &str) -> AnnotatedSentence {
        let tokens = WhitespaceTokenizer.tokenize(text);
        AnnotatedSentence {
            id: id.to_string(),
            paper_id: "p0".to_string(),
            text: text.to_string(),
            tokens,
            symbols: vec![],
            links: vec![],
            syntax: None,
        }
    }

    pub fn with_symbol(mut s: AnnotatedSentence, id: &str, toks: &[usize]) -> AnnotatedSentence {
        s.symbols.push(SymbolOccurrence {
            id: id.to_string(),
            token_indices: toks.to_vec(),
        });
        s
    }

    pub fn with_link(
        mut s: AnnotatedSentence,
        id: &str,
        fragments: &[[usize; 2]],
    ) -> AnnotatedSentence {
        s.links.push(SymbolDefLink {
            symbol_id: id.to_string(),
            definition: DefinitionSpan::new(fragments.to_vec()),
        });
        s
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn valid_sentence_passes() {
        let s = sentence("s1", "SYMBOL is a vector");
        let s = with_symbol(s, "S1", &[0]);
        let s = with_link(s, "S1", &[[3, 3]]);
        s.validate().unwrap();
    }

    #[test]
    fn unknown_symbol_in_link_is_named() {
        let s = with_link(sentence("s1", "x is a vector"), "S9", &[[3, 3]]);
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("S9"), "{err}");
    }

    #[test]
    fn shared_symbol_tokens_rejected() {
        let s = sentence("s", "a b c");
        let s = with_symbol(with_symbol(s, "A", &[0, 1]), "B", &[1]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn non_contiguous_symbol_rejected() {
        let s = with_symbol(sentence("s", "a b c"), "A", &[0, 2]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn overlapping_fragments_rejected() {
        let s = with_symbol(sentence("s", "a b c d"), "A", &[0]);
        let s = with_link(s, "A", &[[1, 2], [2, 3]]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn two_links_for_one_symbol_rejected() {
        let s = with_symbol(sentence("s", "a b c d"), "A", &[0]);
        let s = with_link(with_link(s, "A", &[[1, 1]]), "A", &[[3, 3]]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn syntax_length_checked() {
        let mut s = sentence("s", "a b");
        s.syntax = Some(SyntaxChannels {
            pos: Some(vec!["DT".into()]),
            ..Default::default()
        });
        assert!(s.validate().unwrap_err().to_string().contains("pos"));
    }

    #[test]
    fn normalized_fuses_overlaps_only() {
        let span = DefinitionSpan::normalized(vec![[5, 6], [0, 2], [2, 3], [4, 4]]);
        assert_eq!(span.fragments, vec![[0, 3], [4, 4], [5, 6]]);
    }
}
