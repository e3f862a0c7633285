use alloc::string::String;
use alloc::vec::Vec;

use crate::degrade::jpeg::JpegError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("image buffer length {actual} does not match {width}x{height}x{channels}")]
    BufferSize {
        width: usize,
        height: usize,
        channels: usize,
        actual: usize,
    },
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    Channels(usize),
    #[error("zero-sized image dimension {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("images differ in shape: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize, usize), (usize, usize, usize)),

    #[error("kernel sigma must be positive and finite, got ({sigma_x}, {sigma_y})")]
    KernelSigma { sigma_x: f64, sigma_y: f64 },
    #[error("kernel rotation {0} outside [0, pi)")]
    KernelTheta(f64),
    #[error("kernel size must be odd and at least 1, got {0}")]
    KernelSize(usize),
    #[error("{size}x{size} kernel does not fit a {width}x{height} image")]
    KernelTooLarge {
        size: usize,
        width: usize,
        height: usize,
    },
    #[error("cannot parse rotation angle `{0}`")]
    ThetaSyntax(String),
    #[error("invalid degradation parameter: {0}")]
    InvalidParam(String),

    #[error(transparent)]
    Jpeg(#[from] JpegError),

    #[error("parameter grid axis `{0}` is empty")]
    EmptyAxis(&'static str),
    #[error("parameter grid axis `{axis}`: {reason}")]
    InvalidAxis { axis: &'static str, reason: String },
    #[error("value {value} is not on grid axis `{axis}`")]
    NotInGrid { axis: &'static str, value: String },
    #[error("combination index {0} out of range")]
    CombinationIndex(u64),

    #[error("embedding is empty, non-finite or zero")]
    DegenerateEmbedding,
    #[error("embedding dimension mismatch: store has {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("no embedding stored under key `{0}`")]
    MissingEmbedding(String),

    #[error("invalid pair set: {0}")]
    PairSet(String),
    #[error("fold {0} has no training pairs")]
    EmptyFold(usize),
    #[error("expected {expected} scores, got {found}")]
    ScoreCount { expected: usize, found: usize },
    #[error("threshold set has {found} folds, pair set has {expected}")]
    FoldCount { expected: usize, found: usize },
    #[error("missing results for combination indices {0:?}")]
    MissingRuns(Vec<u64>),
    #[error("duplicate result for combination {combination}, repeat {repeat}")]
    DuplicateRun { combination: u64, repeat: u32 },
}
