//! Command-line companion for the pooling library: synthetic data
//! generation, descriptor pooling, joint training, and cross-validated
//! method comparison, with versioned on-disk formats for every artifact.

pub mod cli;
pub mod commands;
pub mod error;
pub mod eval;
pub mod report;
pub mod store;

pub use commands::run;
pub use error::CliError;
