//! Plain-text `key = value` configuration. Defaults, then the config file,
//! then command-line flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use defx::corpus::{SplitConfig, SplitMode};
use defx::encode::EncoderConfig;
use defx::targeting::{NonTargetSymbols, ProjectionConfig};
use defx::TrainConfig;
use sha2::{Digest, Sha256};

use crate::Coded;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenizerKind {
    Punct,
    Whitespace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Policy {
    FirstOccurrence,
    Interactive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    /// 0 lets rayon pick
    pub threads: usize,
    pub tokenizer: TokenizerKind,
    pub split: SplitConfig,
    pub projection: ProjectionConfig,
    pub min_count: usize,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub gate: bool,
    pub max_symbols: usize,
    pub policy: Policy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        PipelineConfig {
            seed: train.seed,
            threads: 0,
            tokenizer: TokenizerKind::Punct,
            split: SplitConfig::default(),
            projection: ProjectionConfig::default(),
            min_count: 1,
            encoder: EncoderConfig::default(),
            train,
            gate: false,
            max_symbols: 10,
            policy: Policy::FirstOccurrence,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, Coded>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Coded::config(format!("{key}: cannot parse {value:?}: {e}")))
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Coded> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "ingest.tokenizer" => {
                self.tokenizer = match value {
                    "punct" => TokenizerKind::Punct,
                    "whitespace" => TokenizerKind::Whitespace,
                    _ => return Err(Coded::config(format!("{key}: expected punct|whitespace"))),
                }
            }
            "split.mode" => {
                self.split.mode = match value {
                    "by-paper" => SplitMode::ByPaper,
                    "by-sentence" => SplitMode::BySentence,
                    _ => {
                        return Err(Coded::config(format!(
                            "{key}: expected by-paper|by-sentence"
                        )))
                    }
                }
            }
            "split.dev_fraction" => self.split.dev_fraction = parse(key, value)?,
            "split.test_fraction" => self.split.test_fraction = parse(key, value)?,
            "expand.non_target_symbols" => {
                self.projection.non_target_symbols = match value {
                    "outside" => NonTargetSymbols::Outside,
                    "term" => NonTargetSymbols::Term,
                    _ => return Err(Coded::config(format!("{key}: expected outside|term"))),
                }
            }
            "encoder.min_count" => self.min_count = parse(key, value)?,
            "encoder.window" => self.encoder.window = parse(key, value)?,
            "encoder.affix_len" => self.encoder.affix_len = parse(key, value)?,
            "encoder.near_distance" => self.encoder.near_distance = parse(key, value)?,
            "encoder.use_syntax" => self.encoder.use_syntax = parse(key, value)?,
            "train.epochs" => self.train.epochs = parse(key, value)?,
            "train.batch_size" => self.train.batch_size = parse(key, value)?,
            "train.max_seq_len" => self.train.max_seq_len = parse(key, value)?,
            "train.lr" => self.train.learning_rate = parse(key, value)?,
            "train.l2" => self.train.l2_lambda = parse(key, value)?,
            "train.lambda_cls" => self.train.classifier_loss_weight = parse(key, value)?,
            "train.adagrad_epsilon" => self.train.adagrad_epsilon = parse(key, value)?,
            "train.patience" => {
                self.train.patience = match value {
                    "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "predict.gate" => self.gate = parse(key, value)?,
            "eval.max_symbols" => self.max_symbols = parse(key, value)?,
            "answers.policy" => {
                self.policy = match value {
                    "first-occurrence" => Policy::FirstOccurrence,
                    "interactive" => Policy::Interactive,
                    _ => {
                        return Err(Coded::config(format!(
                            "{key}: expected first-occurrence|interactive"
                        )))
                    }
                }
            }
            _ => return Err(Coded::config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Every key with its effective value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let t = &self.train;
        vec![
            ("seed", self.seed.to_string()),
            ("threads", self.threads.to_string()),
            (
                "ingest.tokenizer",
                match self.tokenizer {
                    TokenizerKind::Punct => "punct",
                    TokenizerKind::Whitespace => "whitespace",
                }
                .into(),
            ),
            (
                "split.mode",
                match self.split.mode {
                    SplitMode::ByPaper => "by-paper",
                    SplitMode::BySentence => "by-sentence",
                }
                .into(),
            ),
            ("split.dev_fraction", self.split.dev_fraction.to_string()),
            ("split.test_fraction", self.split.test_fraction.to_string()),
            (
                "expand.non_target_symbols",
                match self.projection.non_target_symbols {
                    NonTargetSymbols::Outside => "outside",
                    NonTargetSymbols::Term => "term",
                }
                .into(),
            ),
            ("encoder.min_count", self.min_count.to_string()),
            ("encoder.window", self.encoder.window.to_string()),
            ("encoder.affix_len", self.encoder.affix_len.to_string()),
            (
                "encoder.near_distance",
                self.encoder.near_distance.to_string(),
            ),
            ("encoder.use_syntax", self.encoder.use_syntax.to_string()),
            ("train.epochs", t.epochs.to_string()),
            ("train.batch_size", t.batch_size.to_string()),
            ("train.max_seq_len", t.max_seq_len.to_string()),
            ("train.lr", t.learning_rate.to_string()),
            ("train.l2", t.l2_lambda.to_string()),
            ("train.lambda_cls", t.classifier_loss_weight.to_string()),
            ("train.adagrad_epsilon", t.adagrad_epsilon.to_string()),
            (
                "train.patience",
                t.patience.map_or_else(|| "none".into(), |p| p.to_string()),
            ),
            ("predict.gate", self.gate.to_string()),
            ("eval.max_symbols", self.max_symbols.to_string()),
            (
                "answers.policy",
                match self.policy {
                    Policy::FirstOccurrence => "first-occurrence",
                    Policy::Interactive => "interactive",
                }
                .into(),
            ),
        ]
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// SHA-256 of [`to_text`](Self::to_text), minus `threads`, which never
    /// changes results.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries() {
            if k != "threads" {
                h.update(format!("{k} = {v}\n"));
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), Coded> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Coded::config(format!(
                    "line {}: expected key = value",
                    i + 1
                )));
            };
            self.set(k.trim(), v.trim())
                .map_err(|e| Coded::config(format!("line {}: {}", i + 1, e.message)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Coded::io(format!("{}: {e}", path.display())))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Seed flows into the split and the trainer.
    pub fn finish(&mut self) {
        self.split.seed = self.seed;
        self.train.seed = self.seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_round_trips() {
        let mut cfg = PipelineConfig::default();
        cfg.set("train.epochs", "7").unwrap();
        cfg.set("train.patience", "3").unwrap();
        cfg.set("split.mode", "by-sentence").unwrap();
        let mut back = PipelineConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = PipelineConfig::default()
            .apply_text("# c\nseed = 1\nbogus = 2\n")
            .unwrap_err();
        assert!(err.message.starts_with("line 3"), "{}", err.message);
    }

    #[test]
    fn threads_do_not_change_hash() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.threads = 8;
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
