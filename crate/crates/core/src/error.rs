// SPDX-License-Identifier: MIT OR Apache-2.0

//! Error type shared by every module of the toolkit.

use std::io;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Rejection sampling ran out of attempts for a class-conditional graph.
    #[error("sampling exhausted after {attempts} attempts for {aspect} = {target}")]
    SamplingExhausted {
        aspect: String,
        target: String,
        attempts: u32,
    },

    #[error("unknown node identifier {0:?}")]
    UnknownIdentifier(char),

    /// A graph violates a structural invariant.
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("label {label:?} is not in the label set of {aspect}")]
    UnknownLabel { aspect: String, label: String },

    #[error("layout exhausted after {attempts} attempts (min separation {min_separation})")]
    LayoutExhausted { attempts: u32, min_separation: f64 },

    #[error("layout has no position for node slot {0}")]
    MissingPosition(usize),

    #[error("rasterization failed: {0}")]
    RasterFailure(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bad magic bytes: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("unsupported format version {0}")]
    VersionUnsupported(u32),

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: u64,
        limit: u64,
    },

    /// File length disagrees with the sizes declared in its header.
    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("dump metadata has no patch grid")]
    NoGrid,

    #[error("configuration conflict: {0}")]
    ConfigConflict(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Training data contains fewer than two classes.
    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("stream mismatch: {0}")]
    StreamMismatch(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// The target set covers every position, so no mean vector exists.
    #[error("target set covers all {positions} positions, complement is empty")]
    EmptyComplement { positions: usize },

    #[error("no data: {0}")]
    NoData(String),

    /// A loss, parameter or input value is NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
