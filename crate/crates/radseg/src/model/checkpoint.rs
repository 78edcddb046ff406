//! Checkpoint file format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! 8 bytes ASCII magic "RSGCKPT1"
//! u32 LE  header length in bytes
//! header  UTF-8 JSON: format_version, architecture config, training
//!         metadata, ordered tensor entries {name, shape}, optional
//!         optimiser state lengths
//! blobs   raw f32 LE tensor data, one blob per entry in header order,
//!         then optimiser first/second moment blobs when present
//! ```
//!
//! Entries cover every visited tensor, learnable and buffer alike, in
//! canonical visit order, so restoring a checkpoint reproduces
//! batch-norm running statistics exactly.

use super::multistage::{ms_tcn, ms_unet, MsModel, StageInput};
use super::{Tcn, TcnConfig, UNet1D, UNetConfig};
use crate::data::Normalizer;
use crate::nn::{Layer, ParamView, TensorBCL};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RSGCKPT1";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version: {0}")]
    VersionMismatch(String),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint does not fit this model: {0}")]
    Incompatible(String),
}

/// Which network a checkpoint holds, with everything needed to rebuild it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArchConfig {
    Unet {
        #[serde(default)]
        config: UNetConfig,
        #[serde(default = "one_stage")]
        stages: usize,
        #[serde(default)]
        stage_input: StageInput,
    },
    Tcn {
        #[serde(default)]
        config: TcnConfig,
        #[serde(default = "one_stage")]
        stages: usize,
        #[serde(default)]
        stage_input: StageInput,
    },
}

fn one_stage() -> usize {
    1
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig::Unet {
            config: UNetConfig::default(),
            stages: 1,
            stage_input: StageInput::default(),
        }
    }
}

impl ArchConfig {
    pub fn stages(&self) -> usize {
        match self {
            ArchConfig::Unet { stages, .. } | ArchConfig::Tcn { stages, .. } => *stages,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ArchConfig::Unet { config, stages, .. } => format!(
                "MS-UNet1D ({stages} stage{}), base {}",
                if *stages == 1 { "" } else { "s" },
                config.base_channels
            ),
            ArchConfig::Tcn { config, stages, .. } => format!(
                "MS-TCN ({stages} stage{}), {} features",
                if *stages == 1 { "" } else { "s" },
                config.feature_channels
            ),
        }
    }

    /// Like [`describe`](Self::describe) but without the stage count, for
    /// contexts that annotate stages separately (report tables, legends).
    pub fn describe_backbone(&self) -> String {
        match self {
            ArchConfig::Unet { config, .. } => {
                format!("MS-UNet1D, base {}", config.base_channels)
            }
            ArchConfig::Tcn { config, .. } => {
                format!("MS-TCN, {} features", config.feature_channels)
            }
        }
    }

    pub fn validate(&self) -> Result<(), crate::model::ModelError> {
        if self.stages() == 0 {
            return Err(crate::model::ModelError::InvalidConfig(
                "stage count must be at least 1".into(),
            ));
        }
        match self {
            ArchConfig::Unet { config, .. } => config.validate(),
            ArchConfig::Tcn { config, .. } => config.validate(),
        }
    }

    /// Minimum input length multiple the model accepts.
    pub fn length_multiple(&self) -> usize {
        match self {
            ArchConfig::Unet { config, .. } => config.pool_factor(),
            ArchConfig::Tcn { .. } => 1,
        }
    }

    /// Builds the network with fresh parameters drawn from `seed`.
    pub fn build(&self, seed: u64) -> AnyModel {
        match self {
            ArchConfig::Unet {
                config,
                stages,
                stage_input,
            } => AnyModel::Unet(ms_unet(config, *stages, seed, *stage_input)),
            ArchConfig::Tcn {
                config,
                stages,
                stage_input,
            } => AnyModel::Tcn(ms_tcn(config, *stages, seed, *stage_input)),
        }
    }
}

/// A multi-stage model of either backbone, as reconstructed from a
/// checkpoint's architecture description.
pub enum AnyModel {
    Unet(MsModel<f32, UNet1D<f32>>),
    Tcn(MsModel<f32, Tcn<f32>>),
}

impl AnyModel {
    pub fn n_stages(&self) -> usize {
        match self {
            AnyModel::Unet(m) => m.n_stages(),
            AnyModel::Tcn(m) => m.n_stages(),
        }
    }

    pub fn forward_stages_train(&mut self, x: &TensorBCL<f32>) -> Vec<TensorBCL<f32>> {
        match self {
            AnyModel::Unet(m) => m.forward_stages_train(x),
            AnyModel::Tcn(m) => m.forward_stages_train(x),
        }
    }

    pub fn forward_stages_eval(&self, x: &TensorBCL<f32>) -> Vec<TensorBCL<f32>> {
        match self {
            AnyModel::Unet(m) => m.forward_stages_eval(x),
            AnyModel::Tcn(m) => m.forward_stages_eval(x),
        }
    }

    pub fn backward_stages(&mut self, grads: &[TensorBCL<f32>]) -> TensorBCL<f32> {
        match self {
            AnyModel::Unet(m) => m.backward_stages(grads),
            AnyModel::Tcn(m) => m.backward_stages(grads),
        }
    }
}

impl Layer<f32> for AnyModel {
    fn forward_train(&mut self, x: &TensorBCL<f32>) -> TensorBCL<f32> {
        match self {
            AnyModel::Unet(m) => m.forward_train(x),
            AnyModel::Tcn(m) => m.forward_train(x),
        }
    }

    fn forward_eval(&self, x: &TensorBCL<f32>) -> TensorBCL<f32> {
        match self {
            AnyModel::Unet(m) => m.forward_eval(x),
            AnyModel::Tcn(m) => m.forward_eval(x),
        }
    }

    fn backward(&mut self, grad_out: &TensorBCL<f32>) -> TensorBCL<f32> {
        match self {
            AnyModel::Unet(m) => m.backward(grad_out),
            AnyModel::Tcn(m) => m.backward(grad_out),
        }
    }

    fn zero_grad(&mut self) {
        match self {
            AnyModel::Unet(m) => m.zero_grad(),
            AnyModel::Tcn(m) => m.zero_grad(),
        }
    }

    fn visit<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(ParamView<'a, f32>)) {
        match self {
            AnyModel::Unet(m) => m.visit(prefix, f),
            AnyModel::Tcn(m) => m.visit(prefix, f),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckpointMeta {
    pub epoch: u64,
    pub train_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<Normalizer>,
}

/// Adam moments in canonical learnable order, for faithful resume.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub t: u64,
    pub m: Vec<f32>,
    pub v: Vec<f32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    arch: ArchConfig,
    meta: CheckpointMeta,
    entries: Vec<TensorEntry>,
    /// Optimiser moment vector length; two blobs of this many f32 follow
    /// the tensor blobs, plus the step count here.
    #[serde(skip_serializing_if = "Option::is_none")]
    optim: Option<OptimHeader>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OptimHeader {
    t: u64,
    len: usize,
}

pub struct Checkpoint {
    pub arch: ArchConfig,
    pub meta: CheckpointMeta,
    pub tensors: Vec<(String, Vec<usize>, Vec<f32>)>,
    pub optim: Option<OptimState>,
}

impl Checkpoint {
    /// Snapshots a model's tensors (learnable and buffers) in visit order.
    pub fn from_model(
        arch: &ArchConfig,
        meta: CheckpointMeta,
        model: &mut AnyModel,
        optim: Option<OptimState>,
    ) -> Self {
        let mut tensors = Vec::new();
        model.visit("", &mut |p: ParamView<'_, f32>| {
            tensors.push((p.name.clone(), p.shape.clone(), p.values.to_vec()));
        });
        Checkpoint {
            arch: arch.clone(),
            meta,
            tensors,
            optim,
        }
    }

    /// Writes tensors back into a model. The model must visit exactly the
    /// same names and shapes in the same order.
    pub fn apply_to(&self, model: &mut AnyModel) -> Result<(), CheckpointError> {
        let mut cursor = 0usize;
        let mut error: Option<CheckpointError> = None;
        model.visit("", &mut |p: ParamView<'_, f32>| {
            if error.is_some() {
                return;
            }
            let Some((name, shape, data)) = self.tensors.get(cursor) else {
                error = Some(CheckpointError::Incompatible(format!(
                    "model visits more tensors than the checkpoint's {}",
                    self.tensors.len()
                )));
                return;
            };
            if *name != p.name || *shape != p.shape {
                error = Some(CheckpointError::Incompatible(format!(
                    "tensor {cursor} is {:?}{:?} in the checkpoint but {:?}{:?} in the model",
                    name, shape, p.name, p.shape
                )));
                return;
            }
            p.values.copy_from_slice(data);
            cursor += 1;
        });
        if let Some(e) = error {
            return Err(e);
        }
        if cursor != self.tensors.len() {
            return Err(CheckpointError::Incompatible(format!(
                "checkpoint holds {} tensors, model visits {cursor}",
                self.tensors.len()
            )));
        }
        Ok(())
    }

    /// Rebuilds the architecture and loads the stored tensors into it.
    pub fn build_model(&self) -> Result<AnyModel, CheckpointError> {
        let mut model = self.arch.build(0);
        self.apply_to(&mut model)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let header = Header {
            format_version: CHECKPOINT_FORMAT_VERSION,
            arch: self.arch.clone(),
            meta: self.meta.clone(),
            entries: self
                .tensors
                .iter()
                .map(|(name, shape, _)| TensorEntry {
                    name: name.clone(),
                    shape: shape.clone(),
                })
                .collect(),
            optim: self.optim.as_ref().map(|o| OptimHeader {
                t: o.t,
                len: o.m.len(),
            }),
        };
        let header_bytes = serde_json::to_vec(&header)
            .map_err(|e| CheckpointError::Corrupt(format!("header encode: {e}")))?;
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(CHECKPOINT_MAGIC)?;
        out.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
        out.write_all(&header_bytes)?;
        let mut write_blob = |data: &[f32]| -> Result<(), CheckpointError> {
            let mut bytes = Vec::with_capacity(data.len() * 4);
            for v in data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            out.write_all(&bytes)?;
            Ok(())
        };
        for (_, _, data) in &self.tensors {
            write_blob(data)?;
        }
        if let Some(o) = &self.optim {
            write_blob(&o.m)?;
            write_blob(&o.v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let mut file = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic)
            .map_err(|_| CheckpointError::BadMagic)?;
        if magic != *CHECKPOINT_MAGIC {
            if magic[..7] == CHECKPOINT_MAGIC[..7] {
                return Err(CheckpointError::VersionMismatch(
                    String::from_utf8_lossy(&magic).into_owned(),
                ));
            }
            return Err(CheckpointError::BadMagic);
        }
        let mut len_bytes = [0u8; 4];
        file.read_exact(&mut len_bytes)
            .map_err(|_| CheckpointError::Corrupt("missing header length".into()))?;
        let header_len = u32::from_le_bytes(len_bytes) as usize;
        let mut header_bytes = vec![0u8; header_len];
        file.read_exact(&mut header_bytes)
            .map_err(|_| CheckpointError::Corrupt("header truncated".into()))?;
        let header: Header = serde_json::from_slice(&header_bytes)
            .map_err(|e| CheckpointError::Corrupt(format!("header parse: {e}")))?;
        if header.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(CheckpointError::VersionMismatch(format!(
                "format_version {}",
                header.format_version
            )));
        }
        let mut read_blob = |count: usize, what: &str| -> Result<Vec<f32>, CheckpointError> {
            let mut bytes = vec![0u8; count * 4];
            file.read_exact(&mut bytes)
                .map_err(|_| CheckpointError::Corrupt(format!("{what} truncated")))?;
            Ok(bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let mut tensors = Vec::with_capacity(header.entries.len());
        for entry in &header.entries {
            let count: usize = entry.shape.iter().product();
            let data = read_blob(count, &format!("tensor {:?}", entry.name))?;
            tensors.push((entry.name.clone(), entry.shape.clone(), data));
        }
        let optim = match &header.optim {
            Some(o) => Some(OptimState {
                t: o.t,
                m: read_blob(o.len, "optimiser first moments")?,
                v: read_blob(o.len, "optimiser second moments")?,
            }),
            None => None,
        };
        let mut rest = Vec::new();
        file.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(CheckpointError::Corrupt(format!(
                "{} trailing bytes after the last blob",
                rest.len()
            )));
        }
        Ok(Checkpoint {
            arch: header.arch,
            meta: header.meta,
            tensors,
            optim,
        })
    }
}
