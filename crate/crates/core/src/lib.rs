//! Simultaneous two-sample learning (s2sL).
//!
//! Two training samples are concatenated into one input and the network
//! predicts both labels at once through a multi-hot sigmoid output. At test
//! time the unknown sample is paired with a set of labelled reference
//! samples and the per-pair predictions are combined by majority vote.
//!
//! The crate is organised by stage:
//!
//! - [`numkit`]: dense matrices and the seeded random stream.
//! - [`nnet`]: single-hidden-layer network, adam training, gradient checking
//!   and the text model format.
//! - [`s2s`]: pair construction, the pairwise label codec, reference
//!   selection and voting.
//! - [`datasets`]: CSV ingestion, z-score normalization and synthetic
//!   Gaussian data.
//! - [`evalharness`]: stratified folds, training-data proportions, metrics,
//!   hidden-unit search and the s2sL-vs-MLP experiment runner.
//! - [`cli`]: the `s2sl` command line driver.

pub mod cli;
pub mod datasets;
pub mod error;
pub mod evalharness;
pub mod nnet;
pub mod numkit;
pub mod s2s;

pub use error::{Error, Result};
