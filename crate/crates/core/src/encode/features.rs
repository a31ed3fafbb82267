//! Feature templates.
//!
//! Per token: word identity, shape, affixes, symbol/target flags, bucketed
//! distance to the target, the segment between neighbouring symbols, side of
//! "respectively", the ", and" count, context words, target-anchored context
//! words and optional syntax channels. A coordination-alignment template
//! (`ralign`) pairs the target's position inside a coordinated symbol list
//! with the conjunct index of tokens after that list, in sentences that
//! contain "respectively".

use crate::corpus::SyntaxChannels;
use crate::targeting::TargetSample;

use super::{EncodeError, EncoderConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureStrings {
    pub tokens: Vec<Vec<String>>,
    /// sentence-level features, pooled only
    pub sentence: Vec<String>,
}

const SEPARATORS: [&str; 3] = [",", "and", "or"];

fn is_separator(t: &str) -> bool {
    SEPARATORS.iter().any(|s| t.eq_ignore_ascii_case(s))
}

fn is_clause_end(t: &str) -> bool {
    matches!(t, "." | ";" | "?" | "!")
}

fn shape(word: &str) -> String {
    let mut out = String::new();
    for ch in word.chars() {
        let c = if ch.is_uppercase() {
            'X'
        } else if ch.is_lowercase() {
            'x'
        } else if ch.is_ascii_digit() {
            'd'
        } else {
            ch
        };
        if !out.ends_with(c) {
            out.push(c);
        }
    }
    out
}

fn distance_bucket(d: isize, near: isize) -> String {
    match d {
        0 => "0".into(),
        -1 => "-1".into(),
        1 => "+1".into(),
        d if d < -1 && d >= -near => format!("-{near}..-2"),
        d if d > 1 && d <= near => format!("+2..+{near}"),
        _ => "far".into(),
    }
}

fn count_bucket(n: usize, cap: usize) -> String {
    if n >= cap {
        format!("{cap}+")
    } else {
        n.to_string()
    }
}

/// Position of the target within its coordinated symbol group, and the
/// group's last symbol position.
fn coordination_group(tokens: &[String], is_sym: &[bool], target: usize) -> (usize, usize) {
    let step = |from: usize, dir: isize| -> Option<usize> {
        // skip one or two separators, then require a symbol
        let mut q = from as isize + dir;
        let mut skipped = 0;
        while q >= 0 && (q as usize) < tokens.len() && is_separator(&tokens[q as usize]) {
            skipped += 1;
            q += dir;
        }
        if (1..=2).contains(&skipped) && q >= 0 && (q as usize) < tokens.len() && is_sym[q as usize]
        {
            Some(q as usize)
        } else {
            None
        }
    };
    let mut ordinal = 0;
    let mut p = target;
    while let Some(q) = step(p, -1) {
        ordinal += 1;
        p = q;
    }
    let mut end = target;
    while let Some(q) = step(end, 1) {
        end = q;
    }
    (ordinal, end)
}

pub fn feature_strings(
    sample: &TargetSample,
    syntax: Option<&SyntaxChannels>,
    config: &EncoderConfig,
) -> Result<FeatureStrings, EncodeError> {
    let n = sample.tokens.len();
    if let Some(syn) = syntax.filter(|_| config.use_syntax) {
        let channels = [
            ("pos", syn.pos.as_ref().map(Vec::len)),
            ("dep", syn.dep.as_ref().map(Vec::len)),
            ("abbr", syn.abbr.as_ref().map(Vec::len)),
            ("ent", syn.ent.as_ref().map(Vec::len)),
        ];
        for (channel, len) in channels {
            if let Some(got) = len.filter(|&l| l != n) {
                return Err(EncodeError::SyntaxLength {
                    sentence_id: sample.sentence_id.clone(),
                    sample_index: sample.sample_index,
                    channel,
                    got,
                    want: n,
                });
            }
        }
    }

    let mut is_sym = vec![false; n];
    for &p in &sample.symbol_positions {
        if p < n {
            is_sym[p] = true;
        }
    }
    let target = sample.target;
    let words: Vec<String> = (0..n)
        .map(|i| {
            if Some(i) == target {
                "<TGT>".to_string()
            } else if is_sym[i] {
                "<SYM>".to_string()
            } else {
                sample.tokens[i].to_lowercase()
            }
        })
        .collect();
    let word_at = |j: isize| -> &str {
        if j < 0 {
            "<S>"
        } else if j as usize >= n {
            "</S>"
        } else {
            &words[j as usize]
        }
    };

    let respectively = words.iter().position(|w| w == "respectively");
    let comma_and = sample
        .tokens
        .windows(2)
        .filter(|w| w[0] == "," && w[1].eq_ignore_ascii_case("and"))
        .count();
    let comma_and_feat = format!("cand={}", count_bucket(comma_and, 3));

    // neighbouring symbols around the target
    let (prev_sym, next_sym) = match target {
        Some(t) => (
            (0..t).rev().find(|&j| is_sym[j]),
            (t + 1..n).find(|&j| is_sym[j]),
        ),
        None => (None, None),
    };

    // coordination alignment
    let mut ralign: Vec<Option<&'static str>> = vec![None; n];
    if let Some(t) = target {
        let (ordinal, group_end) = coordination_group(&sample.tokens, &is_sym, t);
        let clause_end = (group_end + 1..n)
            .find(|&j| is_clause_end(&sample.tokens[j]))
            .unwrap_or(n);
        let region = group_end + 1..clause_end;
        if region.clone().any(|j| words[j] == "respectively") {
            let mut conjunct = 0usize;
            let mut prev_was_sep = false;
            for j in region {
                if words[j] == "respectively" {
                    continue;
                }
                ralign[j] = Some(match conjunct.cmp(&ordinal) {
                    std::cmp::Ordering::Equal => "ralign=match",
                    std::cmp::Ordering::Less => "ralign=before",
                    std::cmp::Ordering::Greater => "ralign=after",
                });
                let sep = is_separator(&sample.tokens[j]);
                if sep && !prev_was_sep {
                    conjunct += 1;
                }
                prev_was_sep = sep;
            }
        }
    }

    let near = config.near_distance as isize;
    let mut tokens = Vec::with_capacity(n);
    for i in 0..n {
        let mut f = Vec::with_capacity(24);
        let w = &words[i];
        f.push(format!("w={w}"));
        if !is_sym[i] {
            let raw = &sample.tokens[i];
            f.push(format!("shape={}", shape(raw)));
            let chars: Vec<char> = w.chars().collect();
            for k in 1..=config.affix_len.min(chars.len()) {
                f.push(format!("p{k}={}", chars[..k].iter().collect::<String>()));
                f.push(format!(
                    "s{k}={}",
                    chars[chars.len() - k..].iter().collect::<String>()
                ));
            }
        } else {
            f.push("sym".into());
        }
        match target {
            Some(t) => {
                let d = i as isize - t as isize;
                if d == 0 {
                    f.push("tgt".into());
                }
                f.push(format!("dist={}", distance_bucket(d, near)));
                let seg = if i == t {
                    "seg=tgt"
                } else if i < t && prev_sym.is_none_or(|p| i > p) {
                    "seg=pre"
                } else if i > t && next_sym.is_none_or(|q| i < q) {
                    "seg=post"
                } else {
                    "seg=far"
                };
                f.push(seg.into());
            }
            None => f.push("dist=none".into()),
        }
        f.push(match respectively {
            None => "resp=none".into(),
            Some(r) if i < r => "resp=left".into(),
            Some(r) if i > r => "resp=right".into(),
            Some(_) => "resp=self".into(),
        });
        f.push(comma_and_feat.clone());
        if let Some(r) = ralign[i] {
            f.push(r.into());
        }
        for k in 1..=config.window as isize {
            f.push(format!("w-{k}={}", word_at(i as isize - k)));
            f.push(format!("w+{k}={}", word_at(i as isize + k)));
        }
        if Some(i) == target {
            for k in 1..=config.window as isize {
                f.push(format!("tw-{k}={}", word_at(i as isize - k)));
                f.push(format!("tw+{k}={}", word_at(i as isize + k)));
            }
        }
        if let Some(syn) = syntax.filter(|_| config.use_syntax) {
            if let Some(pos) = &syn.pos {
                f.push(format!("pos={}", pos[i]));
            }
            if let Some(dep) = &syn.dep {
                f.push(format!("dep={}", dep[i]));
            }
            if syn.abbr.as_ref().is_some_and(|a| a[i]) {
                f.push("abbr".into());
            }
            if syn.ent.as_ref().is_some_and(|e| e[i]) {
                f.push("ent".into());
            }
        }
        tokens.push(f);
    }

    let len_bucket = match n {
        0..=10 => "10",
        11..=20 => "20",
        21..=40 => "40",
        _ => "more",
    };
    let mut sentence = vec![
        format!("S:len={len_bucket}"),
        format!("S:nsym={}", count_bucket(sample.symbol_positions.len(), 5)),
        format!("S:{comma_and_feat}"),
        format!("S:resp={}", respectively.is_some()),
    ];
    match target {
        Some(t) => {
            let ordinal = sample.symbol_positions.iter().filter(|&&p| p < t).count();
            sentence.push(format!("S:tgt_ord={}", count_bucket(ordinal, 5)));
        }
        None => sentence.push("S:notarget".into()),
    }
    Ok(FeatureStrings { tokens, sentence })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(tokens: &str, target: Option<usize>, symbols: &[usize]) -> TargetSample {
        TargetSample {
            sentence_id: "s".into(),
            sample_index: 0,
            tokens: tokens.split(' ').map(String::from).collect(),
            target,
            symbol_positions: symbols.to_vec(),
            labels: None,
            has_definition: false,
            target_symbol: None,
            origin: vec![],
            syntax: None,
        }
    }

    fn has(fs: &[String], f: &str) -> bool {
        fs.iter().any(|x| x == f)
    }

    #[test]
    fn target_token_templates() {
        let s = sample("SYMBOL is a vector", Some(0), &[0]);
        let f = feature_strings(&s, None, &EncoderConfig::default()).unwrap();
        assert!(has(&f.tokens[0], "sym"));
        assert!(has(&f.tokens[0], "tgt"));
        assert!(has(&f.tokens[0], "dist=0"));
        assert!(has(&f.tokens[3], "dist=+2..+5"));
        assert!(has(&f.tokens[0], "tw+1=is"));
        assert!(has(&f.tokens[1], "w-1=<TGT>"));
    }

    #[test]
    fn respectively_side() {
        let s = sample(
            "SYMBOL and SYMBOL denote x and y respectively",
            Some(0),
            &[0, 2],
        );
        let f = feature_strings(&s, None, &EncoderConfig::default()).unwrap();
        assert!(has(&f.tokens[4], "resp=left"));
        assert!(has(&f.tokens[7], "resp=self"));
    }

    #[test]
    fn alignment_follows_conjunct_index() {
        // 0 SYMBOL 1 , 2 SYMBOL 3 , 4 and 5 SYMBOL 6 denote 7 x 8 , 9 y 10 , 11 and 12 z 13 respectively 14 .
        let toks = "SYMBOL , SYMBOL , and SYMBOL denote x , y , and z respectively .";
        for (k, &t) in [0usize, 2, 5].iter().enumerate() {
            let s = sample(toks, Some(t), &[0, 2, 5]);
            let f = feature_strings(&s, None, &EncoderConfig::default()).unwrap();
            let matched: Vec<usize> = (0..15)
                .filter(|&j| has(&f.tokens[j], "ralign=match"))
                .filter(|&j| !is_separator(&s.tokens[j]))
                .collect();
            let want = [vec![6, 7], vec![9], vec![12]][k].clone();
            assert_eq!(matched, want, "target {t}");
        }
    }

    #[test]
    fn no_alignment_without_respectively() {
        let s = sample("SYMBOL and SYMBOL denote x and y", Some(0), &[0, 2]);
        let f = feature_strings(&s, None, &EncoderConfig::default()).unwrap();
        assert!(f.tokens.iter().flatten().all(|x| !x.starts_with("ralign")));
    }

    #[test]
    fn untargeted_sample() {
        let s = sample("plain text", None, &[]);
        let f = feature_strings(&s, None, &EncoderConfig::default()).unwrap();
        assert!(has(&f.tokens[0], "dist=none"));
        assert!(has(&f.sentence, "S:notarget"));
    }

    #[test]
    fn syntax_channels_checked_and_used() {
        let mut s = sample("SYMBOL is", Some(0), &[0]);
        let syn = SyntaxChannels {
            pos: Some(vec!["NN".into(), "VBZ".into()]),
            abbr: Some(vec![true, false]),
            ..Default::default()
        };
        let f = feature_strings(&s, Some(&syn), &EncoderConfig::default()).unwrap();
        assert!(has(&f.tokens[1], "pos=VBZ"));
        assert!(has(&f.tokens[0], "abbr"));
        s.tokens.push("x".into());
        assert!(feature_strings(&s, Some(&syn), &EncoderConfig::default()).is_err());
    }

    #[test]
    fn shapes() {
        assert_eq!(shape("Within-Layer"), "Xx-Xx");
        assert_eq!(shape("3x3"), "dxd");
    }
}
