//! Phoneme recognition engine built around a bidirectional LSTM trained with
//! connectionist temporal classification (CTC).
//!
//! The crate is organised along the processing pipeline:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`phoneset`] | Phone inventories, the TIMIT 61→39 folding, label dictionaries |
//! | [`features`] | Audio ingestion, MFCC front-end, HTK parameter files, normalization |
//! | [`network`] | Bidirectional LSTM with peephole memory blocks, forward pass and exact BPTT gradients |
//! | [`ctc`] | CTC loss, forward–backward, gradients, best-path and prefix-search decoding |
//! | [`training`] | Online gradient descent with momentum, early stopping, checkpointing |
//! | [`eval`] | Edit-distance label error rate and multi-run significance statistics |
//!
//! All floating-point state is `f64` and every random draw goes through a
//! seeded [`rand_chacha::ChaCha8Rng`], so identical seeds reproduce identical
//! models bit for bit.

pub(crate) mod bytes;
pub mod ctc;
pub mod eval;
pub mod features;
pub mod labelling;
pub mod math;
pub mod network;
pub mod phoneset;
pub mod training;

pub use labelling::Labelling;
