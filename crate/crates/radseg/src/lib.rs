//! Synthetic interleaved radar pulse datasets with sample-wise segmentation
//! masks, plus the from-scratch neural stack used to segment them.
//!
//! The crate is organised around the pipeline:
//!
//! - [`synth`]: deterministic generation of interleaved multi-class radar
//!   pulse examples (clean IQ, calibrated AWGN, exact 5-channel masks).
//! - [`data`]: the on-disk shard/manifest format, normalisation statistics,
//!   and the windowed sampling pipeline used for training.
//! - [`nn`]: a minimal differentiable layer set (1D convolutions, transposed
//!   convolutions, max pooling, batch norm, activations, losses, Adam) with a
//!   finite-difference gradient oracle.
//! - [`model`]: UNet1D, the multi-stage MS-UNet1D, the dilated TCN reference,
//!   and the checkpoint format.
//! - [`train`]: the training loop and loss history.
//! - [`eval`]: F1/Dice/IoU metrics, SNR-binned evaluation reports, the
//!   energy-detector baseline, and report/chart rendering.

pub mod config;
pub mod data;
pub mod eval;
pub mod model;
pub mod nn;
pub mod rng;
pub mod synth;
pub mod train;

/// Number of signal classes; fixed by the mask layout (one channel each).
pub const CLASS_COUNT: usize = 5;
