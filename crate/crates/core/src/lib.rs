//! Clickbait detection toolkit.
//!
//! The crate bundles everything needed to train, compare and statistically
//! test clickbait detectors on title/content news corpora:
//!
//! * [`corpus`]: loading, validation, source-separated splits, statistics and
//!   annotation agreement.
//! * [`textproc`]: normalization, tokenization, vocabularies and encoding.
//! * [`features`]: handcrafted readability, punctuation and part-of-speech
//!   features with standardization.
//! * [`tensor`]: a small reverse-mode autodiff engine with Adam/AdamW.
//! * [`classical`]: random forest and linear SVM with Platt calibration.
//! * [`neural`]: the dual-branch BiLSTM classifier, an encoder classification
//!   head, and the Siamese title/content contrastive model.
//! * [`eval`]: per-class scores, PR curves, average precision and McNemar's test.
//! * [`ensemble`]: weighted soft voting.
//! * [`pipeline`] and [`cli`]: run configuration, model checkpoints and the
//!   command-line surface.

pub mod classical;
pub mod cli;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod neural;
pub mod pipeline;
pub mod synth;
pub mod tensor;
pub mod textproc;

pub use corpus::{Corpus, Label, NewsArticle};
pub use error::{Error, Result};
