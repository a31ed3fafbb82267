//! Deterministic template corpus.
//!
//! Sentences are drawn from a fixed set of templates ("A, B and C denote the
//! X, Y and Z, respectively", copulas, collated pairs, appositives, symbols
//! without definitions, symbol-free sentences, ...) with a seeded generator.
//! Definitions in these templates are located by cues the default encoder
//! exposes: target distance, the segment between symbols, conjunct alignment
//! in "respectively" clauses and the surrounding words.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedSentence, DefinitionSpan, SymbolDefLink, SymbolOccurrence, Token};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub sentences: usize,
    pub papers: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            sentences: 2000,
            papers: 40,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    Respectively,
    Copula,
    Collated,
    Appositive,
    Mixed,
    NoDefinition,
    NoSymbol,
    Discontinuous,
}

const MIX: [(Template, u32); 8] = [
    (Template::Respectively, 30),
    (Template::Copula, 20),
    (Template::Collated, 12),
    (Template::Appositive, 8),
    (Template::Mixed, 10),
    (Template::NoDefinition, 8),
    (Template::NoSymbol, 8),
    (Template::Discontinuous, 4),
];

const SYMBOLS: [&str; 24] = [
    "x", "y", "z", "W", "b", "h_t", "\\alpha", "\\beta", "\\gamma", "n", "d", "k", "\\theta", "L",
    "N", "M", "v", "u", "s_i", "c_j", "\\lambda", "\\sigma", "T", "p",
];

const MULTI_SYMBOLS: [&[&str]; 4] = [
    &["f", "(", "x", ")"],
    &["g", "(", "t", ")"],
    &["|", "V", "|"],
    &["P", "(", "y", ")"],
];

const ADJECTIVES: [&str; 24] = [
    "hidden",
    "input",
    "output",
    "learning",
    "latent",
    "joint",
    "average",
    "maximum",
    "minimum",
    "total",
    "initial",
    "final",
    "sparse",
    "dense",
    "binary",
    "discrete",
    "local",
    "global",
    "temporal",
    "spatial",
    "weighted",
    "normalized",
    "expected",
    "empirical",
];

const NOUNS: [&str; 32] = [
    "matrix",
    "vector",
    "rate",
    "size",
    "dimension",
    "weight",
    "function",
    "parameter",
    "loss",
    "embedding",
    "state",
    "layer",
    "distribution",
    "probability",
    "threshold",
    "variance",
    "mean",
    "label",
    "index",
    "length",
    "kernel",
    "score",
    "gradient",
    "bias",
    "token",
    "graph",
    "node",
    "edge",
    "window",
    "margin",
    "temperature",
    "entropy",
];

const MODIFIERS: [(&str, &str); 4] = [
    ("left", "right"),
    ("upper", "lower"),
    ("forward", "backward"),
    ("first", "second"),
];

const OPENERS: [&[&str]; 4] = [
    &[],
    &["Here", ","],
    &["In", "our", "model", ","],
    &["where"],
];

const FILLERS: [&[&str]; 6] = [
    &["in", "all", "experiments"],
    &["for", "each", "sample"],
    &["from", "the", "training", "data"],
    &["at", "every", "step"],
    &["as", "described", "above"],
    &["throughout", "the", "paper"],
];

struct Builder {
    tokens: Vec<String>,
    symbols: Vec<Vec<usize>>,
    links: Vec<(usize, Vec<[usize; 2]>)>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            tokens: vec![],
            symbols: vec![],
            links: vec![],
        }
    }

    fn words(&mut self, ws: &[&str]) {
        self.tokens.extend(ws.iter().map(|w| w.to_string()));
    }

    fn word(&mut self, w: &str) {
        self.tokens.push(w.to_string());
    }

    fn symbol(&mut self, rng: &mut ChaCha8Rng) -> usize {
        let start = self.tokens.len();
        if rng.gen_bool(0.1) {
            self.words(MULTI_SYMBOLS.choose(rng).expect("non-empty"));
        } else {
            self.word(SYMBOLS.choose(rng).expect("non-empty"));
        }
        self.symbols.push((start..self.tokens.len()).collect());
        self.symbols.len() - 1
    }

    /// Zero to two adjectives and a noun; returns the covered range.
    fn phrase(&mut self, rng: &mut ChaCha8Rng) -> [usize; 2] {
        let start = self.tokens.len();
        let adjectives = rng.gen_range(0..=2);
        for a in ADJECTIVES.choose_multiple(rng, adjectives) {
            self.word(a);
        }
        self.word(NOUNS.choose(rng).expect("non-empty"));
        [start, self.tokens.len() - 1]
    }

    fn link(&mut self, symbol: usize, fragments: Vec<[usize; 2]>) {
        self.links.push((symbol, fragments));
    }

    fn opener(&mut self, rng: &mut ChaCha8Rng) {
        self.words(OPENERS.choose(rng).expect("non-empty"));
    }

    fn filler(&mut self, rng: &mut ChaCha8Rng) {
        self.words(FILLERS.choose(rng).expect("non-empty"));
    }

    /// Coordinated symbol list: "S1 , S2 and S3".
    fn symbol_list(&mut self, rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                if i + 1 == n {
                    if n > 2 && rng.gen_bool(0.5) {
                        self.word(",");
                    }
                    self.word("and");
                } else {
                    self.word(",");
                }
            }
            out.push(self.symbol(rng));
        }
        out
    }

    fn finish(self, id: String, paper_id: String) -> AnnotatedSentence {
        let mut tokens = Vec::with_capacity(self.tokens.len());
        let mut pos = 0;
        for t in &self.tokens {
            let n = t.chars().count();
            tokens.push(Token::new(t.clone(), pos, pos + n));
            pos += n + 1;
        }
        let symbols: Vec<SymbolOccurrence> = self
            .symbols
            .iter()
            .enumerate()
            .map(|(k, toks)| SymbolOccurrence {
                id: format!("T{}", k + 1),
                token_indices: toks.clone(),
            })
            .collect();
        let links = self
            .links
            .into_iter()
            .map(|(k, frags)| SymbolDefLink {
                symbol_id: format!("T{}", k + 1),
                definition: DefinitionSpan::new(frags),
            })
            .collect();
        AnnotatedSentence {
            id,
            paper_id,
            text: self.tokens.join(" "),
            tokens,
            symbols,
            links,
            syntax: None,
        }
    }
}

fn build(template: Template, rng: &mut ChaCha8Rng) -> Builder {
    let mut b = Builder::new();
    match template {
        Template::Respectively => {
            let n = rng.gen_range(2..=4);
            b.opener(rng);
            let syms = b.symbol_list(rng, n);
            b.word(
                ["denote", "are", "represent"]
                    .choose(rng)
                    .expect("non-empty"),
            );
            b.word("the");
            for (i, &s) in syms.iter().enumerate() {
                if i > 0 {
                    if i + 1 == n {
                        if n > 2 && rng.gen_bool(0.5) {
                            b.word(",");
                        }
                        b.word("and");
                    } else {
                        b.word(",");
                    }
                }
                let r = b.phrase(rng);
                b.link(s, vec![r]);
            }
            b.words(&[",", "respectively", "."]);
        }
        Template::Copula => {
            match rng.gen_range(0..3) {
                0 => {
                    b.opener(rng);
                    let s = b.symbol(rng);
                    b.words(&["is", "the"]);
                    let r = b.phrase(rng);
                    b.link(s, vec![r]);
                }
                1 => {
                    b.opener(rng);
                    let s = b.symbol(rng);
                    b.words(&["denotes", "the"]);
                    let r = b.phrase(rng);
                    b.link(s, vec![r]);
                }
                _ => {
                    b.word("Let");
                    let s = b.symbol(rng);
                    b.words(&["be", "the"]);
                    let r = b.phrase(rng);
                    b.link(s, vec![r]);
                }
            }
            if rng.gen_bool(0.4) {
                b.filler(rng);
            }
            b.word(".");
        }
        Template::Collated => {
            let n = rng.gen_range(2..=3);
            for i in 0..n {
                if i > 0 {
                    b.words(if i + 1 == n { &[",", "and"] } else { &[","] });
                }
                let s = b.symbol(rng);
                b.words(&["is", "the"]);
                let r = b.phrase(rng);
                b.link(s, vec![r]);
            }
            b.word(".");
        }
        Template::Appositive => {
            b.words(&["We", "use", "the"]);
            let r = b.phrase(rng);
            let s = b.symbol(rng);
            b.link(s, vec![r]);
            b.filler(rng);
            b.word(".");
        }
        Template::Mixed => {
            b.opener(rng);
            let s = b.symbol(rng);
            b.words(&["is", "the"]);
            let r = b.phrase(rng);
            b.link(s, vec![r]);
            b.word(
                ["computed", "estimated", "obtained"]
                    .choose(rng)
                    .expect("non-empty"),
            );
            b.word(["from", "using", "with"].choose(rng).expect("non-empty"));
            b.symbol(rng);
            b.word(".");
        }
        Template::NoDefinition => {
            match rng.gen_range(0..3) {
                0 => {
                    let _ = b.symbol(rng);
                    b.words(&["is", "computed", "from"]);
                    b.symbol(rng);
                }
                1 => {
                    b.words(&["We", "set"]);
                    b.symbol(rng);
                    b.words(&["=", "0.5"]);
                }
                _ => {
                    b.words(&["We", "update"]);
                    b.symbol(rng);
                    b.words(&["and"]);
                    b.symbol(rng);
                }
            }
            b.filler(rng);
            b.word(".");
        }
        Template::NoSymbol => {
            b.word("The");
            b.phrase(rng);
            b.words(&["is", "fixed"]);
            b.filler(rng);
            b.word(".");
        }
        Template::Discontinuous => {
            let (m1, m2) = *MODIFIERS.choose(rng).expect("non-empty");
            let s1 = b.symbol(rng);
            b.word("and");
            let s2 = b.symbol(rng);
            b.words(&["are", "the"]);
            let a = b.tokens.len();
            b.words(&[m1, "and", m2]);
            let head = b.phrase(rng);
            b.link(s1, vec![[a, a], head]);
            b.link(s2, vec![[a + 2, head[1]]]);
            b.word(".");
        }
    }
    b
}

fn pick_template(rng: &mut ChaCha8Rng) -> Template {
    let total: u32 = MIX.iter().map(|(_, w)| w).sum();
    let mut r = rng.gen_range(0..total);
    for (t, w) in MIX {
        if r < w {
            return t;
        }
        r -= w;
    }
    unreachable!("weights cover the range")
}

/// Sentences are spread evenly over papers `synth-00`, `synth-01`, ...
pub fn generate(config: &SyntheticConfig) -> Vec<AnnotatedSentence> {
    generate_with_templates(config)
        .into_iter()
        .map(|(s, _)| s)
        .collect()
}

pub fn generate_with_templates(config: &SyntheticConfig) -> Vec<(AnnotatedSentence, Template)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let papers = config.papers.max(1);
    (0..config.sentences)
        .map(|i| {
            let paper = i * papers / config.sentences.max(1);
            let template = pick_template(&mut rng);
            let b = build(template, &mut rng);
            let s = b.finish(
                format!("synth-{paper:02}-{i:04}"),
                format!("synth-{paper:02}"),
            );
            debug_assert!(s.validate().is_ok(), "{:?}", s.validate());
            (s, template)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let cfg = SyntheticConfig {
            sentences: 300,
            papers: 10,
            seed: 3,
        };
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        assert_eq!(a.len(), 300);
        for s in &a {
            s.validate().unwrap();
        }
        let papers: std::collections::BTreeSet<_> = a.iter().map(|s| &s.paper_id).collect();
        assert_eq!(papers.len(), 10);
    }

    #[test]
    fn every_template_appears() {
        let got: std::collections::BTreeSet<String> =
            generate_with_templates(&SyntheticConfig::default())
                .into_iter()
                .map(|(_, t)| format!("{t:?}"))
                .collect();
        assert_eq!(got.len(), MIX.len());
    }

    #[test]
    fn discontinuous_links_share_the_head() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = build(Template::Discontinuous, &mut rng).finish("s".into(), "p".into());
        s.validate().unwrap();
        assert_eq!(s.links[0].definition.fragments.len(), 2);
        let head = s.links[0].definition.fragments[1];
        assert_eq!(s.links[1].definition.fragments[0][1], head[1]);
    }
}
