//! Free-text answers to slot labels.
//!
//! The sentence is shown with its symbols numbered `SYMBOL1..SYMBOLn`. An
//! answer may talk about several symbols; alignment for symbol `k`:
//!
//! 1. split the answer into clauses and keep those whose first symbol mention
//!    is `SYMBOLk` (clauses without any mention continue the previous one);
//! 2. if a negative pattern matches, every label is `O`;
//! 3. strip meta-commentary, the target mention and leading copulas, then
//!    drop words that do not occur in the sentence;
//! 4. a word occurring once in the sentence is labeled there, `B-DEF` for the
//!    first answer word and `I-DEF` after it;
//! 5. a word occurring several times is resolved by an [`OccurrenceChooser`].
//!
//! Labels are then BIO-repaired: an `I-DEF` without a DEF token before it
//! becomes `B-DEF`.

use std::io::{BufRead, Write};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{PunctTokenizer, Tokenizer};
use crate::targeting::{TagLabel, SYMBOL_TOKEN};

use super::InteropError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignStatus {
    Aligned,
    Negative,
    Ambiguous,
    Unalignable,
}

/// `labels` cover the sentence tokens; they are absent only when the answer
/// could not be aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerAlignment {
    pub symbol_id: String,
    pub raw_answer: String,
    pub status: AlignStatus,
    pub labels: Option<Vec<TagLabel>>,
    pub ambiguity_notes: Vec<String>,
}

/// One line of an answer file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub sentence_id: String,
    /// 1-based
    pub symbol_ordinal: usize,
    pub answer: String,
}

pub fn read_answers<R: BufRead>(reader: R) -> Result<Vec<AnswerRecord>, InteropError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| InteropError::Json {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Renders masked tokens with symbols numbered in order of appearance.
pub fn number_symbols(tokens: &[String], symbol_positions: &[usize]) -> Vec<String> {
    let mut out = tokens.to_vec();
    let mut sorted = symbol_positions.to_vec();
    sorted.sort_unstable();
    for (k, p) in sorted.into_iter().enumerate() {
        out[p] = format!("{SYMBOL_TOKEN}{}", k + 1);
    }
    out
}

/// Regular expressions driving the alignment. All are matched
/// case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerConfig {
    pub negative_patterns: Vec<String>,
    /// removed anywhere in a clause
    pub meta_patterns: Vec<String>,
    /// removed repeatedly from the start of a clause once the target
    /// mention is gone
    pub lead_patterns: Vec<String>,
}

impl Default for AnswerConfig {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|p| p.to_string()).collect();
        AnswerConfig {
            negative_patterns: s(&[
                r"\bhas no (specific )?definition\b",
                r"\bhave no (specific )?definitions?\b",
                r"\bthere (is|are) no (specific )?definitions?\b",
                r"\b(SYMBOL\d*|it|they) (is|are) not defined\b",
                r"\bno definitions? (is |are )?(given|provided)\b",
            ]),
            meta_patterns: s(&[
                r"it is not possible to say for certain[^.]*",
                r"\bhowever\b,?",
                r"\bwe can infer that\b",
                r"\b(might|may|could|can) be defined as\b",
                r"\bwhich is likely\b",
            ]),
            lead_patterns: s(&[
                r"^\s*[,:]",
                r"^\s*(is|are) (defined|described|given) as\b",
                r"^\s*(is|are|denotes?|represents?|refers to|stands for|corresponds to)\b",
                r"^\s*(the|a|an)\b",
            ]),
        }
    }
}

/// Picks one of several sentence positions for an answer word.
pub trait OccurrenceChooser {
    /// `None` skips the word.
    fn choose(&mut self, word: &str, candidates: &[usize], tokens: &[String]) -> Option<usize>;
    /// Whether a choice counts as resolved (interactive) or as a guess.
    fn is_authoritative(&self) -> bool;
}

/// Earliest candidate; marks the alignment ambiguous.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstOccurrence;

impl OccurrenceChooser for FirstOccurrence {
    fn choose(&mut self, _: &str, candidates: &[usize], _: &[String]) -> Option<usize> {
        candidates.first().copied()
    }

    fn is_authoritative(&self) -> bool {
        false
    }
}

/// Prints the candidates and reads a choice (1-based, empty line skips).
pub struct InteractiveChooser<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> InteractiveChooser<R, W> {
    pub fn new(input: R, output: W) -> Self {
        InteractiveChooser { input, output }
    }
}

impl<R: BufRead, W: Write> OccurrenceChooser for InteractiveChooser<R, W> {
    fn choose(&mut self, word: &str, candidates: &[usize], tokens: &[String]) -> Option<usize> {
        let _ = writeln!(self.output, "{}", tokens.join(" "));
        let _ = writeln!(self.output, "\"{word}\" occurs {} times:", candidates.len());
        for (k, &p) in candidates.iter().enumerate() {
            let lo = p.saturating_sub(3);
            let hi = (p + 4).min(tokens.len());
            let _ = writeln!(
                self.output,
                "  {}: [{p}] ... {} ...",
                k + 1,
                tokens[lo..hi].join(" ")
            );
        }
        loop {
            let _ = write!(self.output, "choice (empty to skip): ");
            let _ = self.output.flush();
            let mut line = String::new();
            if self.input.read_line(&mut line).ok()? == 0 {
                return None;
            }
            let line = line.trim();
            if line.is_empty() {
                return None;
            }
            match line.parse::<usize>() {
                Ok(k) if (1..=candidates.len()).contains(&k) => return Some(candidates[k - 1]),
                _ => {
                    let _ = writeln!(self.output, "enter 1..{}", candidates.len());
                }
            }
        }
    }

    fn is_authoritative(&self) -> bool {
        true
    }
}

fn compile(patterns: &[String]) -> Result<Vec<Regex>, InteropError> {
    patterns
        .iter()
        .map(|p| {
            Regex::new(&format!("(?i){p}")).map_err(|e| InteropError::Pattern {
                pattern: p.clone(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Compiled [`AnswerConfig`].
#[derive(Debug, Clone)]
pub struct AnswerAligner {
    negative: Vec<Regex>,
    meta: Vec<Regex>,
    lead: Vec<Regex>,
    mention: Regex,
    clause_end: Regex,
}

impl AnswerAligner {
    pub fn new(config: &AnswerConfig) -> Result<Self, InteropError> {
        Ok(AnswerAligner {
            negative: compile(&config.negative_patterns)?,
            meta: compile(&config.meta_patterns)?,
            lead: compile(&config.lead_patterns)?,
            mention: Regex::new(r"\bSYMBOL(\d+)\b").expect("static pattern"),
            clause_end: Regex::new(r"[.;!?](\s+|$)").expect("static pattern"),
        })
    }

    pub fn is_negative(&self, text: &str) -> bool {
        self.negative.iter().any(|r| r.is_match(text))
    }

    /// Clauses about symbol `ordinal`, and clauses that mention no symbol at
    /// all before the first mention.
    fn chunk<'a>(&self, answer: &'a str, ordinal: usize) -> (Vec<&'a str>, Vec<&'a str>) {
        let mut clauses = Vec::new();
        let mut start = 0;
        for m in self.clause_end.find_iter(answer) {
            clauses.push(&answer[start..m.end()]);
            start = m.end();
        }
        if start < answer.len() {
            clauses.push(&answer[start..]);
        }
        let mut own = Vec::new();
        let mut preamble = Vec::new();
        let mut owner: Option<usize> = None;
        for c in clauses.into_iter().filter(|c| !c.trim().is_empty()) {
            if let Some(k) = self
                .mention
                .captures(c)
                .and_then(|cap| cap[1].parse::<usize>().ok())
            {
                owner = Some(k);
            }
            match owner {
                None => preamble.push(c),
                Some(k) if k == ordinal => own.push(c),
                Some(_) => {}
            }
        }
        (own, preamble)
    }

    fn clean(&self, clause: &str, ordinal: usize) -> String {
        let mut text = clause.to_string();
        for r in &self.meta {
            text = r.replace_all(&text, " ").into_owned();
        }
        let target = Regex::new(&format!(r"\b{SYMBOL_TOKEN}{ordinal}\b")).expect("escaped pattern");
        // the target mention and whatever scaffolding precedes it
        if let Some(m) = target.find(&text) {
            text = text[m.end()..].to_string();
        }
        text = target.replace_all(&text, " ").into_owned();
        loop {
            let before = text.len();
            for r in &self.lead {
                text = r.replace(&text, "").into_owned();
            }
            if text.len() == before {
                break;
            }
        }
        text
    }

    pub fn align(
        &self,
        sentence_tokens: &[String],
        ordinal: usize,
        answer: &str,
        chooser: &mut dyn OccurrenceChooser,
    ) -> Result<AnswerAlignment, InteropError> {
        let target_name = format!("{SYMBOL_TOKEN}{ordinal}");
        let symbols = sentence_tokens
            .iter()
            .filter(|t| self.mention.is_match(t) && t.starts_with(SYMBOL_TOKEN))
            .count();
        let Some(target_pos) = sentence_tokens.iter().position(|t| *t == target_name) else {
            return Err(InteropError::Ordinal { ordinal, symbols });
        };
        let mut result = AnswerAlignment {
            symbol_id: target_name,
            raw_answer: answer.to_string(),
            status: AlignStatus::Aligned,
            labels: None,
            ambiguity_notes: Vec::new(),
        };
        let n = sentence_tokens.len();

        let (own, preamble) = self.chunk(answer, ordinal);
        let negative = if own.is_empty() {
            preamble.iter().any(|c| self.is_negative(c))
        } else {
            own.iter().any(|c| self.is_negative(c))
        };
        if negative {
            result.status = AlignStatus::Negative;
            result.labels = Some(vec![TagLabel::O; n]);
            return Ok(result);
        }
        if own.is_empty() {
            result.status = AlignStatus::Unalignable;
            result
                .ambiguity_notes
                .push(format!("no clause about SYMBOL{ordinal}"));
            return Ok(result);
        }

        let lower: Vec<String> = sentence_tokens.iter().map(|t| t.to_lowercase()).collect();
        let mut words = Vec::new();
        for clause in &own {
            let cleaned = self.clean(clause, ordinal);
            for tok in PunctTokenizer.tokenize(&cleaned) {
                let w = tok.text.to_lowercase();
                if w.chars().all(|c| !c.is_alphanumeric()) {
                    continue;
                }
                if lower
                    .iter()
                    .enumerate()
                    .any(|(i, t)| *t == w && i != target_pos)
                {
                    words.push(w);
                }
            }
        }
        if words.is_empty() {
            result.status = AlignStatus::Unalignable;
            return Ok(result);
        }

        let mut labels = vec![TagLabel::O; n];
        let mut taken = vec![false; n];
        let mut first = true;
        for w in &words {
            let candidates: Vec<usize> = (0..n)
                .filter(|&i| i != target_pos && lower[i] == *w && !taken[i])
                .collect();
            let pick = match candidates.len() {
                0 => {
                    result
                        .ambiguity_notes
                        .push(format!("\"{w}\": every occurrence already used, skipped"));
                    None
                }
                1 => Some(candidates[0]),
                _ => {
                    let p = chooser.choose(w, &candidates, sentence_tokens);
                    if !chooser.is_authoritative() {
                        result.status = AlignStatus::Ambiguous;
                    }
                    result.ambiguity_notes.push(match p {
                        Some(p) => format!("\"{w}\" occurs at {candidates:?}; chose {p}"),
                        None => format!("\"{w}\" occurs at {candidates:?}; skipped"),
                    });
                    p
                }
            };
            if let Some(p) = pick {
                taken[p] = true;
                labels[p] = if first {
                    TagLabel::BDef
                } else {
                    TagLabel::IDef
                };
                first = false;
            }
        }
        for i in 0..n {
            if labels[i] == TagLabel::IDef && (i == 0 || !labels[i - 1].is_def()) {
                labels[i] = TagLabel::BDef;
            }
        }
        if labels.iter().all(|l| *l == TagLabel::O) {
            result.status = AlignStatus::Unalignable;
            return Ok(result);
        }
        result.labels = Some(labels);
        Ok(result)
    }
}

/// [`AnswerAligner::align`] with the default patterns.
pub fn align_answer(
    sentence_tokens: &[String],
    ordinal: usize,
    answer: &str,
    chooser: &mut dyn OccurrenceChooser,
) -> Result<AnswerAlignment, InteropError> {
    AnswerAligner::new(&AnswerConfig::default())?.align(sentence_tokens, ordinal, answer, chooser)
}
