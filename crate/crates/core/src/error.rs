//! Crate-wide error type.

use std::fmt;

use crate::seqmask::DecodeError;

#[derive(Debug)]
pub enum Error {
    /// Candidate level set violates its invariants (ordering, size, bounds).
    InvalidLevels(String),
    /// Class index outside `[0, m^T)`.
    IndexOutOfRange { index: u64, count: u64 },
    /// Assignment contains a token count that is not a candidate level.
    InvalidAssignment(String),
    /// Scene parameters outside their documented ranges.
    InvalidScene(String),
    /// Two videos (or masks/vectors) with incompatible shapes.
    ShapeMismatch { expected: String, got: String },
    /// Calibration produced a degenerate population (zero spread).
    DegenerateCalibration(String),
    /// Percentile denominator is not positive.
    DegeneratePercentile { spread: f64 },
    /// Autoregressive chunk size outside `[1, T]`.
    ChunkOutOfRange { chunk: usize, blocks: usize },
    /// Feature or parameter vector length mismatch.
    DimensionMismatch { expected: usize, got: usize },
    /// Training loss became non-finite at the given optimizer step.
    Divergence { step: usize },
    /// Stats or dataset file does not match the active levels/dims config.
    StatsMismatch(String),
    /// Decoder state machine misuse (disallowed id, advance past Done).
    Protocol(String),
    /// Token sequence failed to parse.
    Decode(DecodeError),
    /// Malformed persisted file.
    Format(String),
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidLevels(msg) => write!(f, "invalid candidate levels: {msg}"),
            Error::IndexOutOfRange { index, count } => {
                write!(f, "assignment index {index} out of range [0, {count})")
            }
            Error::InvalidAssignment(msg) => write!(f, "invalid assignment: {msg}"),
            Error::InvalidScene(msg) => write!(f, "invalid scene spec: {msg}"),
            Error::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected {expected}, got {got}")
            }
            Error::DegenerateCalibration(msg) => write!(f, "degenerate calibration: {msg}"),
            Error::DegeneratePercentile { spread } => {
                write!(f, "degenerate percentile population: best-worst spread {spread}")
            }
            Error::ChunkOutOfRange { chunk, blocks } => {
                write!(f, "chunk size {chunk} out of range [1, {blocks}]")
            }
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::Divergence { step } => {
                write!(f, "training diverged: non-finite loss at step {step}")
            }
            Error::StatsMismatch(msg) => write!(f, "stats mismatch: {msg}"),
            Error::Protocol(msg) => write!(f, "decoder protocol violation: {msg}"),
            Error::Decode(e) => write!(f, "sequence decode failed: {e}"),
            Error::Format(msg) => write!(f, "malformed file: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<DecodeError> for Error {
    fn from(e: DecodeError) -> Self {
        Error::Decode(e)
    }
}
