//! Acoustic feature extraction and emotion classification for acted
//! speech corpora.
//!
//! The pipeline decodes utterances, removes silence, computes 38 frame
//! descriptors plus their deltas, summarizes them into a 1582-dimensional
//! vector, reduces that vector to 100 dimensions per feature subset, and
//! classifies it with calibrated one-vs-all linear SVMs that may abstain.

pub mod corpus;
pub mod dimred;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod extract;
pub mod features;
pub mod functionals;
pub mod lld;
pub mod matrix;
pub mod persist;
pub mod seed;
pub mod svm;
pub mod tsne;

pub use error::{Error, Result};
