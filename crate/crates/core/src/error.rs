//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

/// All failure modes of the library surface.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Vector lengths disagree with the declared dimension.
    DimensionMismatch { expected: usize, found: usize },
    /// A training bag has no points.
    EmptyBag,
    /// An input contained NaN or infinity.
    NonFiniteInput,
    /// A dual state does not match the data it is checked against.
    StateMismatch,
    /// Homogeneous-map input outside the non-negative domain.
    NegativeInput { index: usize, value: f64 },
    /// Decision evaluated against a point list of the wrong length.
    OrderingMismatch { expected: usize, found: usize },
    /// A class id in `[0, d)` has no training descriptors.
    MissingClass { class_id: usize },
    /// A Gram matrix offered for training is not positive semidefinite.
    NotPsd { min_eigenvalue: f64 },
    /// Paired inputs have inconsistent counts.
    CountMismatch { left: usize, right: usize },
    /// A generator or run specification violates its invariants.
    InvalidSpec(String),
    /// Dataset with no frames at all.
    EmptyDataset,
    /// Sampling source with no frames.
    EmptySource,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::EmptyBag => write!(f, "empty bag"),
            Error::NonFiniteInput => write!(f, "non-finite input value"),
            Error::StateMismatch => write!(f, "dual state does not match the data"),
            Error::NegativeInput { index, value } => {
                write!(f, "negative input at coordinate {index}: {value}")
            }
            Error::OrderingMismatch { expected, found } => {
                write!(f, "training ordering mismatch: expected {expected} points, found {found}")
            }
            Error::MissingClass { class_id } => {
                write!(f, "class {class_id} has no descriptors")
            }
            Error::NotPsd { min_eigenvalue } => {
                write!(f, "gram matrix is not PSD (min eigenvalue {min_eigenvalue:e})")
            }
            Error::CountMismatch { left, right } => {
                write!(f, "count mismatch: {left} vs {right}")
            }
            Error::InvalidSpec(msg) => write!(f, "invalid specification: {msg}"),
            Error::EmptyDataset => write!(f, "dataset contains no frames"),
            Error::EmptySource => write!(f, "sampling source contains no frames"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
