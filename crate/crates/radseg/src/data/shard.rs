//! Shard wire format.
//!
//! A shard starts with the 6 magic bytes `52 53 47 44 31 00` ("RSGD1\0"),
//! written even for an empty split. Each example then follows as:
//!
//! ```text
//! u32 LE  example index (contiguous from 0)
//! f32 LE  snr_db
//! u32 LE  n_samples
//! n pairs of f32 LE: I then Q per sample
//! 5 * ceil(n/8) mask bytes, channel-major, LSB-first within a byte
//! ```
//!
//! Every record in one shard has the same `n_samples`, so record offsets are
//! computed rather than scanned; the file size is validated on open.

use super::{DataError, DatasetManifest, ManifestRecord, MANIFEST_FORMAT_VERSION};
use crate::data::normalize::{NormalizerAccumulator, Normalizer};
use crate::data::SegMask;
use crate::synth::{GenerationConfig, IqSignal, SignalExample};
use crate::CLASS_COUNT;
use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

pub const SHARD_MAGIC: [u8; 6] = [0x52, 0x53, 0x47, 0x44, 0x31, 0x00];

pub fn shard_path(dir: &Path, split: &str) -> PathBuf {
    dir.join(format!("{split}.rsgd"))
}

/// Bytes per example record for a given signal length.
pub fn record_size(n_samples: usize) -> usize {
    4 + 4 + 4 + n_samples * 8 + CLASS_COUNT * n_samples.div_ceil(8)
}

/// Streams examples to a shard in index order and collects the manifest.
pub struct DatasetWriter {
    dir: PathBuf,
    split: String,
    config: GenerationConfig,
    file: BufWriter<File>,
    records: Vec<ManifestRecord>,
    next_index: u32,
    norm_acc: NormalizerAccumulator,
}

impl DatasetWriter {
    pub fn create(dir: &Path, split: &str, config: &GenerationConfig) -> Result<Self, DataError> {
        std::fs::create_dir_all(dir)?;
        let mut file = BufWriter::new(File::create(shard_path(dir, split))?);
        file.write_all(&SHARD_MAGIC)?;
        Ok(DatasetWriter {
            dir: dir.to_path_buf(),
            split: split.to_string(),
            config: config.clone(),
            file,
            records: Vec::new(),
            next_index: 0,
            norm_acc: NormalizerAccumulator::new(),
        })
    }

    /// Appends one example. Indices must arrive contiguously from 0.
    pub fn append(&mut self, ex: &SignalExample) -> Result<(), DataError> {
        if ex.index != self.next_index {
            return Err(DataError::IndexGap {
                expected: self.next_index,
                got: ex.index,
            });
        }
        let n = ex.iq.i.len();
        debug_assert_eq!(n, ex.iq.q.len());
        debug_assert_eq!(n, self.config.n_samples);
        self.file.write_all(&ex.index.to_le_bytes())?;
        self.file.write_all(&ex.snr_db.to_le_bytes())?;
        self.file.write_all(&(n as u32).to_le_bytes())?;
        let mut iq_bytes = Vec::with_capacity(n * 8);
        for s in 0..n {
            iq_bytes.extend_from_slice(&ex.iq.i[s].to_le_bytes());
            iq_bytes.extend_from_slice(&ex.iq.q[s].to_le_bytes());
        }
        self.file.write_all(&iq_bytes)?;
        self.file.write_all(ex.mask.as_bytes())?;
        self.norm_acc.add_signal(&ex.iq);
        self.records.push(ManifestRecord {
            index: ex.index,
            snr_db: ex.snr_db,
            emitters: ex.emitters.clone(),
        });
        self.next_index += 1;
        Ok(())
    }

    /// Flushes the shard and writes the manifest. `embed_normalizer` is set
    /// for training splits so downstream stages standardise with statistics
    /// of the data the model saw.
    pub fn finish(mut self, embed_normalizer: bool) -> Result<DatasetManifest, DataError> {
        self.file.flush()?;
        let normalizer = if embed_normalizer {
            Some(self.norm_acc.finish()?)
        } else {
            None
        };
        let manifest = DatasetManifest {
            format_version: MANIFEST_FORMAT_VERSION.to_string(),
            split: self.split.clone(),
            count: self.records.len(),
            config: self.config.clone(),
            normalizer,
            records: std::mem::take(&mut self.records),
        };
        manifest.save(&self.dir)?;
        Ok(manifest)
    }
}

/// Read view over one split: manifest in memory, shard read on demand.
pub struct Dataset {
    shard: PathBuf,
    pub manifest: DatasetManifest,
}

impl Dataset {
    pub fn open(dir: &Path, split: &str) -> Result<Self, DataError> {
        let manifest = DatasetManifest::load(dir, split)?;
        let shard = shard_path(dir, split);
        let mut file = File::open(&shard)?;
        let mut magic = [0u8; 6];
        file.read_exact(&mut magic)
            .map_err(|_| DataError::CorruptShard("shard shorter than magic".into()))?;
        if magic != SHARD_MAGIC {
            return Err(DataError::CorruptShard(format!(
                "bad magic {magic:02x?}"
            )));
        }
        let expect = SHARD_MAGIC.len() as u64
            + (manifest.count * record_size(manifest.config.n_samples)) as u64;
        let actual = file.metadata()?.len();
        if actual != expect {
            return Err(DataError::CorruptShard(format!(
                "shard is {actual} bytes, expected {expect} for {} examples of {} samples",
                manifest.count, manifest.config.n_samples
            )));
        }
        Ok(Dataset { shard, manifest })
    }

    pub fn len(&self) -> usize {
        self.manifest.count
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.count == 0
    }

    pub fn normalizer(&self) -> Option<Normalizer> {
        self.manifest.normalizer
    }

    pub fn read_example(&self, index: usize) -> Result<SignalExample, DataError> {
        if index >= self.manifest.count {
            return Err(DataError::OutOfRange {
                index,
                count: self.manifest.count,
            });
        }
        let n = self.manifest.config.n_samples;
        let rec = record_size(n);
        let mut file = File::open(&self.shard)?;
        file.seek(SeekFrom::Start(
            SHARD_MAGIC.len() as u64 + (index * rec) as u64,
        ))?;
        let mut buf = vec![0u8; rec];
        file.read_exact(&mut buf)
            .map_err(|_| DataError::CorruptShard(format!("record {index} truncated")))?;

        let stored_index = u32::from_le_bytes(buf[0..4].try_into().unwrap());
        if stored_index != index as u32 {
            return Err(DataError::CorruptShard(format!(
                "record {index} carries index {stored_index}"
            )));
        }
        let snr_db = f32::from_le_bytes(buf[4..8].try_into().unwrap());
        let stored_n = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
        if stored_n != n {
            return Err(DataError::CorruptShard(format!(
                "record {index} has {stored_n} samples, split declares {n}"
            )));
        }
        let mut i = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        let mut off = 12;
        for _ in 0..n {
            i.push(f32::from_le_bytes(buf[off..off + 4].try_into().unwrap()));
            q.push(f32::from_le_bytes(buf[off + 4..off + 8].try_into().unwrap()));
            off += 8;
        }
        let mask = SegMask::from_bytes(CLASS_COUNT, n, buf[off..].to_vec());
        let emitters = self.manifest.records[index].emitters.clone();
        Ok(SignalExample {
            index: index as u32,
            iq: IqSignal { i, q },
            mask,
            snr_db,
            emitters,
        })
    }

    /// Loads every example into memory. Intended for training splits small
    /// enough to hold resident; evaluation streams via `read_example`.
    pub fn load_all(&self) -> Result<Vec<SignalExample>, DataError> {
        (0..self.len()).map(|i| self.read_example(i)).collect()
    }
}

/// Renders `count` examples for one split and writes shard plus manifest.
/// Rendering runs in parallel; writing stays in index order.
pub fn generate_split(
    dir: &Path,
    split: &str,
    config: &GenerationConfig,
    count: usize,
    embed_normalizer: bool,
) -> Result<DatasetManifest, DataError> {
    use rayon::prelude::*;
    let seed = super::split_seed(config.global_seed, split);
    let mut writer = DatasetWriter::create(dir, split, config)?;
    // Render in modest chunks so peak memory stays bounded on large splits.
    let chunk = 64;
    let mut start = 0u32;
    while (start as usize) < count {
        let end = (start as usize + chunk).min(count) as u32;
        let examples: Vec<SignalExample> = (start..end)
            .into_par_iter()
            .map(|i| crate::synth::render_example(seed, i, config))
            .collect();
        for ex in &examples {
            writer.append(ex)?;
        }
        start = end;
    }
    writer.finish(embed_normalizer)
}
