//! Run configuration: one JSON document covering generation, data
//! layout, model architecture, training, and evaluation.
//!
//! Every section rejects unknown keys so typos fail loudly instead of
//! silently falling back to defaults, and any omitted field takes its
//! default. Command-line flags are applied on top of the loaded file by
//! the binary; the fully resolved document is what gets echoed next to
//! a run's outputs.

use crate::eval::EvalConfig;
use crate::model::ArchConfig;
use crate::synth::GenerationConfig;
use crate::train::TrainConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse failure: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// The three dataset splits, in generation order.
pub const SPLITS: [&str; 3] = ["train", "val", "test"];

/// Where datasets live and how many examples each split gets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub dir: PathBuf,
    pub train_count: usize,
    pub val_count: usize,
    pub test_count: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            dir: PathBuf::from("data"),
            train_count: 10_000,
            val_count: 1_000,
            test_count: 1_000,
        }
    }
}

impl DataConfig {
    pub fn count_for(&self, split: &str) -> Option<usize> {
        match split {
            "train" => Some(self.train_count),
            "val" => Some(self.val_count),
            "test" => Some(self.test_count),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generation: GenerationConfig,
    pub data: DataConfig,
    pub model: ArchConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Validates every section plus the couplings between them: window
    /// lengths must fit the example length and the model's length
    /// requirement.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.generation
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.model
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.eval
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let multiple = self.model.length_multiple();
        let n = self.generation.n_samples;
        for (label, window) in [("train", self.train.window), ("eval", self.eval.window)] {
            if window % multiple != 0 {
                return Err(ConfigError::Invalid(format!(
                    "{label} window {window} is not a multiple of the model's length step {multiple}"
                )));
            }
            if window > n {
                return Err(ConfigError::Invalid(format!(
                    "{label} window {window} exceeds the example length {n}"
                )));
            }
        }
        Ok(())
    }
}
