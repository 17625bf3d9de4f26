//! Surrogate losses, scorers, trainers and exact regret oracles for learning
//! to defer with multiple experts.
//!
//! Labels and experts are 0-based throughout: a single-stage score vector has
//! width `n + n_e`, where index `y < n` predicts label `y` and index `n + j`
//! defers to expert `j`. Two-stage score vectors have width `n_e`.
//!
//! The `parallel` feature (on by default) runs data-parallel loops on rayon.
//! Every reduction is chunked in a fixed order, so results are bit-identical
//! with the feature off or with any thread count.

pub mod error;
pub mod exec;
pub mod losses;
pub mod models;
pub mod oracles;
pub mod rng;
pub mod suites;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
