//! Format bridges: SciERC-style JSON for span-based IE systems, and alignment
//! of free-text answers ("SYMBOL3 is defined as ...") onto slot labels.

mod answer;
mod scierc;

use thiserror::Error;

pub use answer::{
    align_answer, number_symbols, read_answers, AlignStatus, AnswerAligner, AnswerAlignment,
    AnswerConfig, AnswerRecord, FirstOccurrence, InteractiveChooser, OccurrenceChooser,
};
pub use scierc::{from_scierc, read_scierc, to_scierc, write_scierc, ScircRecord, RELATION};

#[derive(Debug, Error)]
pub enum InteropError {
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("document {doc_key}, sentence {sentence}: {message}")]
    Scierc {
        doc_key: String,
        sentence: usize,
        message: String,
    },
    #[error("invalid pattern {pattern:?}: {message}")]
    Pattern { pattern: String, message: String },
    #[error("target ordinal {ordinal} out of range ({symbols} symbols)")]
    Ordinal { ordinal: usize, symbols: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
