//! Token-level scoring with B-/I- tags merged into three classes (O, TERM,
//! DEF), symbol-count buckets, sample-level error categories, and
//! inter-annotator agreement.
//!
//! Zero denominators: precision with no predictions, or recall with no gold
//! tokens, is 0 and recorded in [`EvalReport::flags`]. A class that is absent
//! from both gold and prediction scores 1.0 and is flagged as well.

mod iaa;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::targeting::TagLabel;

pub use iaa::{compute_iaa, ExactMatch, IaaReport, OverlapCounts, Prf};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{gold} gold sequences but {pred} predictions")]
    CountMismatch { gold: usize, pred: usize },
    #[error("{counts} symbol counts for {samples} samples")]
    SymbolCountMismatch { counts: usize, samples: usize },
    #[error("sample {index}: gold has {gold} labels, prediction has {pred}")]
    LengthMismatch {
        index: usize,
        gold: usize,
        pred: usize,
    },
    #[error("sentence {0} is missing from one annotation set")]
    SentenceMismatch(String),
    #[error("sentence {0} is tokenized differently in the two annotation sets")]
    Tokenization(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MergedClass {
    O,
    Term,
    Def,
}

impl MergedClass {
    pub const ALL: [MergedClass; 3] = [MergedClass::O, MergedClass::Term, MergedClass::Def];

    pub fn of(tag: TagLabel) -> MergedClass {
        if tag.is_term() {
            MergedClass::Term
        } else if tag.is_def() {
            MergedClass::Def
        } else {
            MergedClass::O
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MergedClass::O => "O",
            MergedClass::Term => "TERM",
            MergedClass::Def => "DEF",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// confusion counts summed over all tokens
    #[default]
    Pooled,
    /// scores computed per sample, then averaged
    PerSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class: MergedClass,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// gold tokens of this class
    pub support: usize,
    pub predicted: usize,
    pub true_positive: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    /// gold has a definition, prediction has none
    pub false_negative: usize,
    /// prediction has a definition, gold has none
    pub false_positive: usize,
    /// both have a definition but over different tokens
    pub mislabeled: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    PrecisionUndefined,
    RecallUndefined,
    ClassAbsent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub class: MergedClass,
    pub kind: FlagKind,
    /// samples affected (1 for pooled scores)
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketScore {
    pub symbol_count: usize,
    pub n: usize,
    /// pooled macro F1 over the samples in this bucket
    pub macro_f1: f64,
    /// mean and population standard deviation of per-sample macro F1
    pub mean_sample_macro_f1: f64,
    pub sd_sample_macro_f1: f64,
    #[serde(skip)]
    sample_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub averaging: Averaging,
    pub samples: usize,
    pub tokens: usize,
    pub per_class: Vec<ClassScores>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub buckets: Vec<BucketScore>,
    pub error_counts: ErrorCounts,
    pub flags: Vec<Flag>,
}

impl EvalReport {
    pub fn class(&self, c: MergedClass) -> &ClassScores {
        &self.per_class[c.index()]
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8}{:>10}{:>10}{:>10}{:>10}",
            "class", "P", "R", "F1", "support"
        );
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{:<8}{:>10.4}{:>10.4}{:>10.4}{:>10}",
                c.class.as_str(),
                c.precision,
                c.recall,
                c.f1,
                c.support
            );
        }
        let _ = writeln!(
            out,
            "{:<8}{:>10.4}{:>10.4}{:>10.4}{:>10}",
            "macro", self.macro_precision, self.macro_recall, self.macro_f1, self.tokens
        );
        let e = &self.error_counts;
        let _ = writeln!(
            out,
            "samples {}: correct {}, false negative {}, false positive {}, mislabeled {}",
            self.samples, e.correct, e.false_negative, e.false_positive, e.mislabeled
        );
        for f in &self.flags {
            let _ = writeln!(out, "note: {} {:?} ({})", f.class.as_str(), f.kind, f.count);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    tp: [usize; 3],
    gold: [usize; 3],
    pred: [usize; 3],
}

impl Counts {
    fn add(&mut self, gold: &[TagLabel], pred: &[TagLabel]) {
        for (g, p) in gold.iter().zip(pred) {
            let (g, p) = (MergedClass::of(*g).index(), MergedClass::of(*p).index());
            self.gold[g] += 1;
            self.pred[p] += 1;
            if g == p {
                self.tp[g] += 1;
            }
        }
    }

    fn scores(&self, flags: &mut BTreeMap<(MergedClass, FlagKind), usize>) -> [(f64, f64, f64); 3] {
        let mut out = [(0.0, 0.0, 0.0); 3];
        for c in MergedClass::ALL {
            let i = c.index();
            let (tp, gold, pred) = (self.tp[i] as f64, self.gold[i], self.pred[i]);
            if gold == 0 && pred == 0 {
                *flags.entry((c, FlagKind::ClassAbsent)).or_default() += 1;
                out[i] = (1.0, 1.0, 1.0);
                continue;
            }
            let p = if pred == 0 {
                *flags.entry((c, FlagKind::PrecisionUndefined)).or_default() += 1;
                0.0
            } else {
                tp / pred as f64
            };
            let r = if gold == 0 {
                *flags.entry((c, FlagKind::RecallUndefined)).or_default() += 1;
                0.0
            } else {
                tp / gold as f64
            };
            let f = if p + r == 0.0 {
                0.0
            } else {
                2.0 * p * r / (p + r)
            };
            out[i] = (p, r, f);
        }
        out
    }
}

fn macro_f1(scores: &[(f64, f64, f64); 3]) -> f64 {
    scores.iter().map(|s| s.2).sum::<f64>() / 3.0
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn def_positions(labels: &[TagLabel]) -> BTreeSet<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_def())
        .map(|(i, _)| i)
        .collect()
}

pub fn evaluate(
    gold: &[Vec<TagLabel>],
    pred: &[Vec<TagLabel>],
    symbol_counts: &[usize],
) -> Result<EvalReport, EvalError> {
    evaluate_with(gold, pred, symbol_counts, Averaging::Pooled)
}

pub fn evaluate_with(
    gold: &[Vec<TagLabel>],
    pred: &[Vec<TagLabel>],
    symbol_counts: &[usize],
    averaging: Averaging,
) -> Result<EvalReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::CountMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if symbol_counts.len() != gold.len() {
        return Err(EvalError::SymbolCountMismatch {
            counts: symbol_counts.len(),
            samples: gold.len(),
        });
    }
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(EvalError::LengthMismatch {
                index,
                gold: g.len(),
                pred: p.len(),
            });
        }
    }

    let mut total = Counts::default();
    let mut errors = ErrorCounts::default();
    let mut per_sample = Vec::with_capacity(gold.len());
    let mut sample_flags = BTreeMap::new();
    let mut bucket_counts: BTreeMap<usize, (Counts, Vec<f64>)> = BTreeMap::new();
    for ((g, p), &k) in gold.iter().zip(pred).zip(symbol_counts) {
        let mut c = Counts::default();
        c.add(g, p);
        for i in 0..3 {
            total.tp[i] += c.tp[i];
            total.gold[i] += c.gold[i];
            total.pred[i] += c.pred[i];
        }
        let s = c.scores(&mut sample_flags);
        let entry = bucket_counts.entry(k).or_default();
        entry.0.add(g, p);
        entry.1.push(macro_f1(&s));
        per_sample.push(s);

        let (gd, pd) = (def_positions(g), def_positions(p));
        match (gd.is_empty(), pd.is_empty()) {
            (false, true) => errors.false_negative += 1,
            (true, false) => errors.false_positive += 1,
            (false, false) if gd != pd => errors.mislabeled += 1,
            _ => errors.correct += 1,
        }
    }

    let mut pooled_flags = BTreeMap::new();
    let scores = match averaging {
        Averaging::Pooled => total.scores(&mut pooled_flags),
        Averaging::PerSample => {
            pooled_flags = sample_flags;
            let mut acc = [(0.0, 0.0, 0.0); 3];
            for s in &per_sample {
                for i in 0..3 {
                    acc[i].0 += s[i].0;
                    acc[i].1 += s[i].1;
                    acc[i].2 += s[i].2;
                }
            }
            let n = per_sample.len().max(1) as f64;
            acc.map(|(p, r, f)| (p / n, r / n, f / n))
        }
    };

    let per_class = MergedClass::ALL
        .into_iter()
        .map(|c| {
            let i = c.index();
            ClassScores {
                class: c,
                precision: scores[i].0,
                recall: scores[i].1,
                f1: scores[i].2,
                support: total.gold[i],
                predicted: total.pred[i],
                true_positive: total.tp[i],
            }
        })
        .collect::<Vec<_>>();
    let mean = |f: fn(&ClassScores) -> f64| per_class.iter().map(f).sum::<f64>() / 3.0;

    let buckets = bucket_counts
        .into_iter()
        .map(|(k, (c, sample_scores))| {
            let (m, sd) = mean_sd(&sample_scores);
            BucketScore {
                symbol_count: k,
                n: sample_scores.len(),
                macro_f1: macro_f1(&c.scores(&mut BTreeMap::new())),
                mean_sample_macro_f1: m,
                sd_sample_macro_f1: sd,
                sample_scores,
            }
        })
        .collect();

    Ok(EvalReport {
        averaging,
        samples: gold.len(),
        tokens: total.gold.iter().sum(),
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        per_class,
        buckets,
        error_counts: errors,
        flags: pooled_flags
            .into_iter()
            .map(|((class, kind), count)| Flag { class, kind, count })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub symbol_count: usize,
    pub n: usize,
    /// mean per-sample macro F1; `None` for empty buckets
    pub macro_f1: Option<f64>,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeAggregate {
    pub from: usize,
    pub to: usize,
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketTable {
    pub rows: Vec<BucketRow>,
    pub ranges: Vec<RangeAggregate>,
}

impl BucketTable {
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        let mut out = format!("{:>8}{:>8}{:>10}{:>10}\n", "symbols", "n", "macroF1", "sd");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>8}{:>8}{:>10}{:>10}",
                r.symbol_count,
                r.n,
                fmt(r.macro_f1),
                fmt(r.sd)
            );
        }
        for g in &self.ranges {
            let _ = writeln!(
                out,
                "{:>8}{:>8}{:>10}{:>10}",
                format!("{}-{}", g.from, g.to),
                g.n,
                fmt(g.mean),
                fmt(g.sd)
            );
        }
        out
    }

    /// `symbol_count,macro_f1,n` rows for non-empty buckets.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("symbol_count,macro_f1,n\n");
        for r in &self.rows {
            if let Some(f) = r.macro_f1 {
                let _ = writeln!(out, "{},{},{}", r.symbol_count, f, r.n);
            }
        }
        out
    }
}

/// Rows for symbol counts `0..=max_symbols` and aggregates over the samples
/// with 1-5 and 6-10 symbols.
pub fn bucket_report(report: &EvalReport, max_symbols: usize) -> BucketTable {
    let by_count: BTreeMap<usize, &BucketScore> =
        report.buckets.iter().map(|b| (b.symbol_count, b)).collect();
    let rows = (0..=max_symbols)
        .map(|k| match by_count.get(&k) {
            Some(b) => BucketRow {
                symbol_count: k,
                n: b.n,
                macro_f1: Some(b.mean_sample_macro_f1),
                sd: Some(b.sd_sample_macro_f1),
            },
            None => BucketRow {
                symbol_count: k,
                n: 0,
                macro_f1: None,
                sd: None,
            },
        })
        .collect();
    let ranges = [(1, 5), (6, 10)]
        .into_iter()
        .map(|(from, to)| {
            let scores: Vec<f64> = report
                .buckets
                .iter()
                .filter(|b| (from..=to).contains(&b.symbol_count))
                .flat_map(|b| b.sample_scores.iter().copied())
                .collect();
            let (m, sd) = mean_sd(&scores);
            let some = !scores.is_empty();
            RangeAggregate {
                from,
                to,
                n: scores.len(),
                mean: some.then_some(m),
                sd: some.then_some(sd),
            }
        })
        .collect();
    BucketTable { rows, ranges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TagLabel::*;

    #[test]
    fn perfect_prediction() {
        let g = vec![vec![O, BTerm, BDef, IDef], vec![BTerm, O]];
        let r = evaluate(&g, &g, &[1, 2]).unwrap();
        assert_eq!(r.macro_f1, 1.0);
        assert_eq!(r.error_counts.correct, 2);
        let t = bucket_report(&r, 3);
        assert_eq!(t.rows[1].macro_f1, Some(1.0));
        assert_eq!(t.rows[2].macro_f1, Some(1.0));
        assert_eq!(t.rows[0].macro_f1, None);
    }

    #[test]
    fn hand_example() {
        let g = vec![vec![O, BTerm, BDef, IDef]];
        let p = vec![vec![O, O, O, O]];
        let r = evaluate(&g, &p, &[1]).unwrap();
        let o = r.class(MergedClass::O);
        assert_eq!((o.precision, o.recall), (0.25, 1.0));
        assert!((o.f1 - 0.4).abs() < 1e-15);
        assert_eq!(r.class(MergedClass::Term).precision, 0.0);
        assert!((r.macro_f1 - 0.4 / 3.0).abs() < 1e-12);
        assert!(r
            .flags
            .iter()
            .any(|f| f.class == MergedClass::Term && f.kind == FlagKind::PrecisionUndefined));
        assert_eq!(r.error_counts.false_negative, 1);
    }

    #[test]
    fn error_categories() {
        let g = vec![vec![BTerm, BDef], vec![BTerm, O], vec![BTerm, BDef, O]];
        let p = vec![vec![BTerm, O], vec![BTerm, BDef], vec![BTerm, BDef, BDef]];
        let e = evaluate(&g, &p, &[1, 1, 1]).unwrap().error_counts;
        assert_eq!(
            (e.false_negative, e.false_positive, e.mislabeled),
            (1, 1, 1)
        );
    }

    #[test]
    fn bucket_population_sd() {
        let g = vec![vec![BTerm, BDef], vec![BTerm, BDef]];
        let p = vec![vec![BTerm, BDef], vec![O, O]];
        let r = evaluate(&g, &p, &[2, 2]).unwrap();
        let t = bucket_report(&r, 2);
        let b = &t.rows[2];
        // second sample: O never gold -> P undefined (0), R undefined; TERM, DEF 0
        let second = 0.0;
        assert_eq!(b.n, 2);
        assert!((b.macro_f1.unwrap() - (1.0 + second) / 2.0).abs() < 1e-12);
        assert!((b.sd.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(t.ranges[0].n, 2);
        assert!((t.ranges[0].sd.unwrap() - 0.5).abs() < 1e-12);
        assert!(t.to_csv().starts_with("symbol_count,macro_f1,n\n2,0.5,2"));
    }

    #[test]
    fn length_mismatch_names_sample() {
        let err = evaluate(&[vec![O], vec![O]], &[vec![O], vec![]], &[0, 0]).unwrap_err();
        assert!(matches!(err, EvalError::LengthMismatch { index: 1, .. }));
    }

    #[test]
    fn per_sample_averaging() {
        let g = vec![vec![BTerm, BDef], vec![BTerm, O]];
        let p = vec![vec![BTerm, BDef], vec![BTerm, BDef]];
        let r = evaluate_with(&g, &p, &[1, 1], Averaging::PerSample).unwrap();
        // sample 1 perfect (O absent -> 1.0); sample 2: O F1 0, TERM 1, DEF 0
        let want = (1.0 + 1.0 / 3.0) / 2.0;
        assert!((r.macro_f1 - want).abs() < 1e-12);
    }
}
