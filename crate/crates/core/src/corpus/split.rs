use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotatedSentence, CorpusError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// whole papers go to one split
    ByPaper,
    BySentence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub mode: SplitMode,
    pub dev_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            mode: SplitMode::ByPaper,
            dev_fraction: 0.15,
            test_fraction: 0.15,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<AnnotatedSentence>,
    pub dev: Vec<AnnotatedSentence>,
    pub test: Vec<AnnotatedSentence>,
}

/// Seeded train/dev/test split. In paper mode, papers are shuffled and
/// assigned whole to test, then dev, until each reaches its sentence
/// fraction; the rest is train. Sentences keep corpus order within a split.
pub fn split_corpus(
    corpus: &[AnnotatedSentence],
    config: &SplitConfig,
) -> Result<CorpusSplit, CorpusError> {
    let fr = |f: f64| (0.0..1.0).contains(&f);
    if !fr(config.dev_fraction)
        || !fr(config.test_fraction)
        || config.dev_fraction + config.test_fraction >= 1.0
    {
        return Err(CorpusError::Split(format!(
            "invalid fractions dev={} test={}",
            config.dev_fraction, config.test_fraction
        )));
    }
    let mut seen = HashSet::new();
    for s in corpus {
        if !seen.insert(s.id.as_str()) {
            return Err(CorpusError::Split(format!(
                "duplicate sentence id {}",
                s.id
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total = corpus.len() as f64;
    let test_target = (config.test_fraction * total).round() as usize;
    let dev_target = (config.dev_fraction * total).round() as usize;

    // assignment: 0 train, 1 dev, 2 test
    let mut assign = vec![0u8; corpus.len()];
    match config.mode {
        SplitMode::ByPaper => {
            let mut papers: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, s) in corpus.iter().enumerate() {
                papers.entry(s.paper_id.as_str()).or_default().push(i);
            }
            let mut order: Vec<&str> = papers.keys().copied().collect();
            order.shuffle(&mut rng);
            let (mut n_test, mut n_dev) = (0, 0);
            for p in order {
                let members = &papers[p];
                let bucket = if n_test < test_target {
                    n_test += members.len();
                    2
                } else if n_dev < dev_target {
                    n_dev += members.len();
                    1
                } else {
                    0
                };
                for &i in members {
                    assign[i] = bucket;
                }
            }
        }
        SplitMode::BySentence => {
            let mut idx: Vec<usize> = (0..corpus.len()).collect();
            idx.shuffle(&mut rng);
            for (k, &i) in idx.iter().enumerate() {
                assign[i] = if k < test_target {
                    2
                } else if k < test_target + dev_target {
                    1
                } else {
                    0
                };
            }
        }
    }

    let mut out = CorpusSplit::default();
    for (s, a) in corpus.iter().zip(assign) {
        match a {
            2 => out.test.push(s.clone()),
            1 => out.dev.push(s.clone()),
            _ => out.train.push(s.clone()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::sentence;

    fn corpus() -> Vec<AnnotatedSentence> {
        (0..60)
            .map(|i| {
                let mut s = sentence(&format!("s{i}"), "a b");
                s.paper_id = format!("p{}", i / 6);
                s
            })
            .collect()
    }

    #[test]
    fn paper_split_is_disjoint_and_deterministic() {
        let c = corpus();
        let cfg = SplitConfig {
            seed: 7,
            ..Default::default()
        };
        let a = split_corpus(&c, &cfg).unwrap();
        let b = split_corpus(&c, &cfg).unwrap();
        assert_eq!(a.test, b.test);
        assert_eq!(a.dev, b.dev);
        let papers = |v: &[AnnotatedSentence]| -> HashSet<String> {
            v.iter().map(|s| s.paper_id.clone()).collect()
        };
        assert!(papers(&a.train).is_disjoint(&papers(&a.test)));
        assert!(papers(&a.train).is_disjoint(&papers(&a.dev)));
        assert!(papers(&a.dev).is_disjoint(&papers(&a.test)));
        assert_eq!(a.train.len() + a.dev.len() + a.test.len(), 60);
        assert!(!a.test.is_empty() && !a.dev.is_empty());
    }

    #[test]
    fn sentence_split_sizes() {
        let c = corpus();
        let cfg = SplitConfig {
            mode: SplitMode::BySentence,
            dev_fraction: 0.1,
            test_fraction: 0.2,
            seed: 1,
        };
        let s = split_corpus(&c, &cfg).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (42, 6, 12));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut c = corpus();
        c[1].id = "s0".into();
        assert!(split_corpus(&c, &SplitConfig::default()).is_err());
    }
}
