//! Subspace and direction-of-arrival estimation from coarsely quantized samples.
//!
//! The crate covers dithered one-bit and multi-bit quantizers, the covariance
//! estimators built on them, leading-eigenspace extraction, multi-snapshot
//! ESPRIT, and a Monte-Carlo harness for the accompanying experiments.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod doa;
pub mod estimate;
pub mod harness;
pub mod numcore;
pub mod quantize;
pub mod randsrc;
pub mod snapshots;
pub mod subspace;

pub use doa::{AngleSet, DOAResult};
pub use estimate::CovarianceEstimate;
pub use harness::{ExperimentConfig, ResultTable};
pub use numcore::{ComplexMatrix, HermitianEig, SvdResult};
pub use quantize::{QuantizedBatch, QuantizedPair, QuantizerSpec, Scheme};
pub use randsrc::{RngStream, Role};
pub use snapshots::{Field, NoiseModel, SnapshotBatch};
pub use subspace::SubspaceEstimate;

pub use num_complex::Complex64;
