//! On-disk dataset format and the training data pipeline.
//!
//! A dataset directory holds one shard (`<split>.rsgd`) and one manifest
//! (`<split>.manifest.json`) per split. The shard carries raw IQ and
//! bit-packed masks in a fixed little-endian layout; the manifest carries
//! the generation config, every example's drawn emitter parameters (so
//! masks can be re-derived without replaying the generator), and the
//! population normalisation statistics for a training split.

pub mod mask;
pub mod normalize;
pub mod shard;
pub mod windows;

pub use mask::SegMask;
pub use normalize::Normalizer;
pub use shard::{generate_split, Dataset, DatasetWriter};
pub use windows::{EpochBatches, WindowSample};

use crate::rng::{fnv1a, splitmix64};
use crate::synth::{EmitterTruth, GenerationConfig};
use crate::CLASS_COUNT;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("example index {index} out of range for split of {count}")]
    OutOfRange { index: usize, count: usize },
    #[error("corrupt shard: {0}")]
    CorruptShard(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("example stream skipped from index {expected} to {got}")]
    IndexGap { expected: u32, got: u32 },
    #[error("split has no examples")]
    EmptySplit,
    #[error("window of {w} samples exceeds signal length {n}")]
    WindowTooLong { w: usize, n: usize },
}

/// Per-example ground truth stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub index: u32,
    pub snr_db: f32,
    pub emitters: Vec<EmitterTruth>,
}

pub const MANIFEST_FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: String,
    pub split: String,
    pub count: usize,
    pub config: GenerationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<Normalizer>,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn path_for(dir: &Path, split: &str) -> std::path::PathBuf {
        dir.join(format!("{split}.manifest.json"))
    }

    pub fn save(&self, dir: &Path) -> Result<(), DataError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| DataError::Manifest(e.to_string()))?;
        fs::write(Self::path_for(dir, &self.split), text)?;
        Ok(())
    }

    pub fn load(dir: &Path, split: &str) -> Result<Self, DataError> {
        let text = fs::read_to_string(Self::path_for(dir, split))?;
        let manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| DataError::Manifest(e.to_string()))?;
        if manifest.format_version != MANIFEST_FORMAT_VERSION {
            return Err(DataError::Manifest(format!(
                "unsupported manifest format_version {:?}",
                manifest.format_version
            )));
        }
        if manifest.records.len() != manifest.count {
            return Err(DataError::Manifest(format!(
                "manifest count {} does not match {} records",
                manifest.count,
                manifest.records.len()
            )));
        }
        Ok(manifest)
    }
}

/// Seed for one split: mixes the split name into the global seed so no two
/// splits of a dataset can share example streams.
pub fn split_seed(global_seed: u64, split: &str) -> u64 {
    let mut state = global_seed ^ fnv1a(split.as_bytes());
    splitmix64(&mut state);
    state
}

/// Rebuilds a mask purely from emitter truths.
///
/// This is the oracle for the stored masks: it never touches the generator's
/// waveform path, only the timing quantisation (nearest-sample start,
/// nearest-sample width, truncate at the end, drop starts past the end).
pub fn mask_from_truths(
    n_samples: usize,
    sample_rate_hz: f64,
    emitters: &[EmitterTruth],
) -> SegMask {
    let mut mask = SegMask::new(CLASS_COUNT, n_samples);
    for em in emitters {
        let width = (em.pw_us * sample_rate_hz / 1e6).round() as usize;
        for k in 0..em.n_pulses {
            let start_f = ((em.toa_us + k as f64 * em.pri_us) * sample_rate_hz / 1e6).round();
            if start_f >= n_samples as f64 {
                break;
            }
            let start = start_f as usize;
            mask.set_range(em.class.channel(), start, (start + width).min(n_samples));
        }
    }
    mask
}
