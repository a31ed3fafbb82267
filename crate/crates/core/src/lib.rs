//! Target-based definition extraction for mathematical symbols.
//!
//! A sentence with `n` symbols is expanded into `n` samples. Each sample masks
//! every symbol as `SYMBOL`, marks exactly one of them as the target, and asks
//! a sequence labeler for that target's (possibly discontinuous) definition.
//! Coordinated constructions such as "A, C and v denote X, Y and Z
//! respectively" thus decompose into independent single-target queries.
//!
//! Modules:
//!
//! - [`corpus`]: sentence data model, JSONL and BRAT ingestion, corpus
//!   statistics, coordination mining, annotation lint.
//! - [`targeting`]: symbol masking, per-symbol expansion, gold projection to
//!   BIO tags and merging predictions back into symbol/definition pairs.
//! - [`encode`]: the token encoder contract and the default sparse feature
//!   encoder.
//! - [`tagger`]: linear-chain CRF with a sentence-level definition classifier,
//!   trained jointly.
//! - [`eval`]: token-level P/R/F with merged definition tags, symbol-count
//!   buckets, error categories and inter-annotator agreement.
//! - [`interop`]: SciERC export/import and free-text answer alignment.
//! - [`synthetic`]: deterministic template corpus used for learning checks.

pub mod corpus;
pub mod encode;
mod error;
pub mod eval;
pub mod interop;
pub mod synthetic;
pub mod tagger;
pub mod targeting;

pub use corpus::{
    AnnotatedSentence, CorpusStats, DefinitionSpan, SymbolDefLink, SymbolOccurrence,
    SyntaxChannels, Token,
};
pub use encode::{FeatureDictionary, SparseEncoder, TokenEncoder, TokenFeatures};
pub use error::Error;
pub use eval::{EvalReport, IaaReport};
pub use tagger::{CrfModel, TrainConfig};
pub use targeting::{TagLabel, TargetSample};

pub type Result<T, E = Error> = std::result::Result<T, E>;
