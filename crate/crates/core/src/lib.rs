//! Viseme-level visual speech recognition toolkit.
//!
//! The crate covers the full desk-scale recognition pipeline:
//!
//! - [`viseme`] — phoneme inventories, phoneme-to-viseme maps, pronunciation
//!   dictionaries, transcript conversion and garbage-class merging.
//! - [`features`] — linear shape/appearance models: PCA training with
//!   variance-fraction mode selection, projection and reconstruction.
//! - [`hmm`] — Gaussian-mixture HMMs: flat start, embedded Baum-Welch,
//!   silence/short-pause tying, forced alignment and Viterbi decoding.
//! - [`lm`] — bigram language models and word-level decoding networks.
//! - [`scoring`] — edit-distance alignment, correctness/accuracy scoring and
//!   confusion matrices.
//! - [`analysis`] — per-viseme recognition probabilities, rankings, decline
//!   curves, Spearman rank correlation and cross-fold statistics.
//! - [`corpus`] — cross-validation folds, synthetic corpus generation and the
//!   end-to-end training/recognition recipe.
//!
//! All randomness flows from explicit seeds; identical inputs and seeds
//! produce bitwise-identical results.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod features;
pub mod frames;
pub mod hmm;
pub mod lm;
pub mod scoring;
pub mod textio;
pub mod viseme;

pub use error::{Error, Result};
