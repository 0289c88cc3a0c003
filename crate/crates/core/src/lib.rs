//! Max-margin pooling of frame-feature bags.
//!
//! A video sequence is represented as a bag of frame-level feature vectors.
//! Pooling a bag means training a soft-margin SVM that separates the bag
//! from a shared negative bag and keeping the learned parameters as the
//! sequence descriptor. This crate provides the deterministic solvers
//! (dual coordinate descent for the linear case, SMO for kernels), the
//! C-growth pooling loop, joint descriptor/classifier training by block
//! coordinate descent, kernel fusion over descriptor Grams, and a planted
//! synthetic dataset generator for end-to-end evaluation.
//!
//! The crate is `no_std`-compatible (with `alloc`); enable the `libm`
//! feature when building without `std`.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
// Validation guards are written `!(x > 0.0)` rather than `x <= 0.0` so
// that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("enable either the `std` or the `libm` feature");

pub mod dataset;
pub mod error;
pub mod fusion;
pub mod joint;
pub mod kernel;
pub mod ksvm;
pub mod linalg;
mod math;
pub mod pool;
pub mod rng;
pub mod svm;

pub use error::Error;

/// A frame-level feature vector; every entry must be finite and all vectors
/// in one dataset share the same length `p`.
pub type FeatureVector = alloc::vec::Vec<f64>;

pub type Result<T> = core::result::Result<T, Error>;
