//! Segmentation network architectures.
//!
//! Two single-stage backbones ([`unet::UNet1D`] and [`tcn::Tcn`]) plus the
//! multi-stage wrapper ([`multistage::MsModel`]) that chains identical
//! stages, feeding each refinement stage the previous stage's per-channel
//! probabilities. Checkpoint serialisation lives in [`checkpoint`].

pub mod checkpoint;
pub mod multistage;
pub mod tcn;
pub mod unet;

pub use checkpoint::{AnyModel, ArchConfig, Checkpoint, CheckpointError};
pub use multistage::{multi_stage_loss, MsModel, StageInput};
pub use tcn::{Tcn, TcnConfig};
pub use unet::{UNet1D, UNetConfig};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("input length {len} must be a multiple of {multiple}")]
    BadLength { len: usize, multiple: usize },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
}
