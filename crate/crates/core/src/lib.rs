//! Compressive beam alignment for millimeter-wave phased-array links.
//!
//! A random subset of transmit/receive beam-pair power measurements is
//! collected, the full angular power map is recovered as a sparse vector of
//! DCT coefficients by solving a LASSO problem, and the best beam pair is
//! picked from the reconstruction. Accuracy is scored against the
//! exhaustive-search optimum.
//!
//! Module map:
//!
//! * [`arraygeom`]: steering vectors and beam codebooks
//! * [`channelsynth`]: synthetic channels and ground-truth power maps
//! * [`xform`]: orthonormal DCT-II sparsifying basis
//! * [`sensing`]: sample plans, selection matrices, matrix-free operator
//! * [`lasso`]: accelerated proximal-gradient LASSO solver
//! * [`align`]: beam selection, metrics, Monte Carlo harness
//! * [`iocli`]: configuration, file formats, and command implementations

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod arraygeom;
pub mod channelsynth;
mod error;
pub mod iocli;
pub mod lasso;
pub mod sensing;
pub mod xform;

pub use error::{Error, Result};
