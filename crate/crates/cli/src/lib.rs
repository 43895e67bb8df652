//! Harness library behind the `wristkin` command-line tool.
//!
//! Owns every file format (JSON config, JSONL streams), the synthetic
//! consistent-state generator used as a ground-truth oracle, the brute-force
//! grid inverse used to bound the solver's optimality gap, the peg-transfer
//! trajectory generator, and the trial-scoring rubric.

pub mod config;
pub mod error;
pub mod oracle;
pub mod pegboard;
pub mod records;
pub mod replay;
pub mod scoring;
pub mod synth;

pub use error::HarnessError;
