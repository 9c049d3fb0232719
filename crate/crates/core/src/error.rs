use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("expected mono audio, found {channels} channels")]
    NotMono { channels: u16 },

    #[error("unsupported WAV encoding: {0}")]
    UnsupportedWav(String),

    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),

    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),

    #[error("signal of {len} samples is shorter than one {window}-sample window")]
    TooShort { len: usize, window: usize },

    #[error("mask [{t1}, {t2}] is outside a signal of {len} samples")]
    MaskOutOfRange { t1: usize, t2: usize, len: usize },

    #[error("mask [{t1}, {t2}] does not overlap any analysis frame")]
    NoOverlappingFrame { t1: usize, t2: usize },

    #[error("every frame of the sequence is masked")]
    EntireSequenceMasked,

    #[error("generated segment does not cover samples [{start}, {end}]")]
    GeneratedTooShort { start: usize, end: usize },

    #[error("signal is silent; SNR is undefined")]
    SilentSignal,

    #[error("need at least {needed} points for {needed} clusters, got {available}")]
    TooFewPoints { needed: usize, available: usize },

    #[error("unit index {index} out of range for codebook of size {k}")]
    IndexOutOfRange { index: usize, k: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("frame interval [{first}, {last}] outside alignment source range of {len} frames")]
    IntervalOutsidePath { first: usize, last: usize, len: usize },

    #[error("alignment collapse: mapped segment of {0} samples is too short to stretch")]
    AlignmentCollapse(usize),

    #[error("empty reference transcript")]
    EmptyReference,

    #[error("method {method} requires {what}")]
    MissingDependency { method: String, what: String },

    #[error("method {0} is not available in blind mode")]
    BlindUnsupported(String),

    #[error("external command failed: {0}")]
    External(String),

    #[error("bad {format} file: {reason}")]
    Format { format: &'static str, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            format,
            reason: reason.into(),
        }
    }
}
