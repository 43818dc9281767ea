//! Sentiment classification for short, informal messages.
//!
//! The crate bundles a small reverse-mode tensor engine, Skip-gram word
//! embeddings, character-level word vectors from a bidirectional GRU, CNN
//! and GRU encoders, penalty-weighted cross-entropy, dictionary-driven data
//! augmentation (term swaps and negations), a rule tagger for multi-task
//! training, and the training/evaluation pipeline that ties them together.

pub mod augment;
pub mod chars;
pub mod error;
pub mod labels;
pub mod loss;
pub mod models;
pub mod pipeline;
pub mod rules;
pub mod skipgram;
pub mod tensor;
pub mod text;
pub mod vocab;

pub use error::{Error, Result};
pub use labels::{RuleLabel, Sentiment};
