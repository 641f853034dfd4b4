//! Alias mining for game-trace avatars.
//!
//! Traces are turned into fixed-length feature vectors, a classifier is
//! cross-validated over them, and the resulting confusion matrix is read as
//! a fuzzy formal context. Pattern concepts of that context whose extents
//! hold two or more avatars are candidate alias groups; these are expanded
//! into ranked pairs and scored against tiered ground truth.

pub mod classifier;
pub mod dataset;
pub mod evaluation;
pub mod lattice;
pub mod matrix;
pub mod miner;
pub mod par;
pub mod pipeline;
pub mod synthetic;

pub use par::Parallelism;
