//! Tweet topic classification toolkit.
//!
//! The crate covers the full experimental pipeline for benchmarking tweet
//! classifiers under a shared protocol:
//!
//! - [`corpus`]: labeled dataset loading, corpus statistics, and
//!   deterministic stratified fold assignment.
//! - [`preprocess`]: the tweet normalization pipeline (entity placeholders,
//!   hashtag unpacking, elongation and repetition reduction, lowercasing).
//! - [`features`]: vocabularies, bag-of-words, TF-IDF, and pre-trained word
//!   embedding lookups.
//! - [`classical`]: multinomial naive Bayes and softmax logistic regression
//!   built from their mathematical definitions.
//! - [`neural`]: small CNN / LSTM / BiLSTM text classifiers over frozen word
//!   embeddings, with early stopping.
//! - [`finetune`]: sentence-encoder fine-tuning with a pluggable backend and
//!   a deterministic stub encoder for offline verification.
//! - [`evaluate`]: accuracy, stratified cross-validation, grid search, paired
//!   t-tests, and report emission.
//! - [`pipeline`]: ready-made classifier wirings (model + feature plan) used
//!   by the evaluation harness and the CLI.
//!
//! Everything is deterministic under a fixed seed: fold assignment, weight
//! initialization, batch order, and dropout masks all derive from explicit
//! seeds, never from ambient randomness.

pub mod classical;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod finetune;
pub mod neural;
pub mod pipeline;
pub mod preprocess;

pub use error::{Error, Result};

/// Version string recorded in run manifests and serialized models.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Derives a child seed from a base seed and a tag (fold index, grid index,
/// worker id). Uses the splitmix64 finalizer so nearby tags do not produce
/// correlated ChaCha streams.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
