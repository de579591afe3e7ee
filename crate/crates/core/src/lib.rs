//! Unsupervised novelty detection for vibration signals.
//!
//! The crate covers the whole pipeline:
//!
//! - [`signal`]: synthetic shaker dataset generation, chunking and dataset files,
//! - [`features`]: statistical features plus wavelet packet sub-band norms,
//! - [`transform`]: identity, PCA and under/overcomplete autoencoder latent spaces,
//! - [`detectors`]: six unsupervised detectors producing a continuous novelty metric,
//! - [`benchmark`]: the evaluation protocol and its report,
//! - [`hyperopt`]: Gaussian-process Bayesian tuning of transform hyperparameters.
//!
//! Every fitted model is immutable and can be shared across threads.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod detectors;
mod error;
pub mod features;
pub mod hyperopt;
pub mod persist;
pub mod pipeline;
pub mod signal;
pub mod transform;
pub mod util;

pub use error::{Error, Result};
