use thiserror::Error;

use crate::corpus::CorpusError;
use crate::encode::EncodeError;
use crate::eval::EvalError;
use crate::interop::InteropError;
use crate::tagger::TaggerError;
use crate::targeting::TargetingError;

/// Any error raised by the library, tagged with the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Targeting(#[from] TargetingError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Interop(#[from] InteropError),
}

impl Error {
    /// Stable machine-readable code for the error family.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Corpus(_) => "E_CORPUS",
            Error::Targeting(_) => "E_TARGETING",
            Error::Encode(_) => "E_ENCODE",
            Error::Tagger(_) => "E_TAGGER",
            Error::Eval(_) => "E_EVAL",
            Error::Interop(_) => "E_INTEROP",
        }
    }
}
