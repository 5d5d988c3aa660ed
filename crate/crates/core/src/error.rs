use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the extraction, reduction and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WAV data: {0}")]
    Decode(String),
    #[error("unsupported WAV format code {format:#06x} ({bits} bits)")]
    UnsupportedFormat { format: u16, bits: u16 },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("signal too short: {samples} samples, need at least {needed}")]
    TooShort { samples: usize, needed: usize },
    #[error("every frame was classified as unvoiced")]
    AllUnvoiced,
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("train/test leakage: {0}")]
    Leakage(String),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// Tags an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
