//! Training loop: windowed batches, per-stage supervision, Adam updates.
//!
//! One epoch shuffles the training examples with a seed derived from
//! (run seed, epoch index), draws a fixed number of standardised windows
//! per example, runs every stage forward, sums the per-stage losses, and
//! backpropagates through the stage feed. Epoch seeds depend only on the
//! absolute epoch index, so a run resumed from a checkpoint consumes the
//! same window stream the uninterrupted run would have.

use crate::data::windows::{epoch_batches, WindowSample};
use crate::data::{DataError, Normalizer};
use crate::model::checkpoint::{AnyModel, Checkpoint, CheckpointError, CheckpointMeta, OptimState};
use crate::model::{multi_stage_loss, ArchConfig};
use crate::nn::adam::{Adam, AdamConfig};
use crate::nn::loss::LossKind;
use crate::nn::{Layer, TensorBCL};
use crate::rng::splitmix64;
use crate::synth::SignalExample;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("loss became non-finite at epoch {epoch} step {step}: stage losses {stage_losses:?}")]
    NanLoss {
        epoch: u64,
        step: u64,
        stage_losses: Vec<f64>,
    },
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    /// Window length fed to the model; must be a multiple of the
    /// model's length step.
    pub window: usize,
    pub windows_per_example: usize,
    pub loss: LossKind,
    /// Per-stage loss weights; empty means 1.0 for every stage.
    pub stage_weights: Vec<f64>,
    pub seed: u64,
    /// Write a checkpoint every this many epochs; 0 means final only.
    pub checkpoint_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 8,
            window: 4096,
            windows_per_example: 2,
            loss: LossKind::Bce,
            stage_weights: Vec::new(),
            seed: 0,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.window == 0 || self.window % 16 != 0 {
            return Err(TrainError::InvalidConfig(format!(
                "window {} must be a positive multiple of 16",
                self.window
            )));
        }
        if self.batch_size == 0 || self.windows_per_example == 0 {
            return Err(TrainError::InvalidConfig(
                "batch size and windows per example must be positive".into(),
            ));
        }
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(TrainError::InvalidConfig(format!(
                "learning rate {} must be finite and non-negative",
                self.lr
            )));
        }
        if !self.stage_weights.is_empty() && self.stage_weights.iter().any(|w| !w.is_finite()) {
            return Err(TrainError::InvalidConfig(
                "stage weights must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    fn weights_for(&self, stages: usize) -> Result<Vec<f64>, TrainError> {
        if self.stage_weights.is_empty() {
            Ok(vec![1.0; stages])
        } else if self.stage_weights.len() == stages {
            Ok(self.stage_weights.clone())
        } else {
            Err(TrainError::InvalidConfig(format!(
                "{} stage weights for a {stages}-stage model",
                self.stage_weights.len()
            )))
        }
    }
}

/// One optimisation step's record; serialised as the loss-history CSV row
/// (epoch, step, loss).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub epoch: u64,
    pub step: u64,
    pub loss: f64,
}

fn epoch_seed(seed: u64, epoch: u64) -> u64 {
    let mut s = seed ^ epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    splitmix64(&mut s);
    s
}

/// Stacks window samples into model input and target tensors.
pub fn batch_tensors(batch: &[WindowSample]) -> (TensorBCL<f32>, TensorBCL<f32>) {
    assert!(!batch.is_empty());
    let w = batch[0].w;
    let b = batch.len();
    let mut x = TensorBCL::zeros(b, 2, w);
    let mut y = TensorBCL::zeros(b, crate::CLASS_COUNT, w);
    for (i, sample) in batch.iter().enumerate() {
        assert_eq!(sample.w, w, "mixed window lengths in one batch");
        x.row_mut(i, 0).copy_from_slice(&sample.iq[..w]);
        x.row_mut(i, 1).copy_from_slice(&sample.iq[w..]);
        for c in 0..crate::CLASS_COUNT {
            y.row_mut(i, c)
                .copy_from_slice(&sample.mask[c * w..(c + 1) * w]);
        }
    }
    (x, y)
}

/// A training run in progress: model, optimiser, and epoch position.
pub struct TrainSession {
    pub arch: ArchConfig,
    pub config: TrainConfig,
    pub model: AnyModel,
    adam: Adam<f32>,
    normalizer: Normalizer,
    /// Epochs completed so far (resumes continue from here).
    epoch: u64,
    global_step: u64,
}

impl TrainSession {
    pub fn new(
        arch: &ArchConfig,
        config: &TrainConfig,
        normalizer: &Normalizer,
    ) -> Result<Self, TrainError> {
        config.validate()?;
        let model = arch.build(config.seed);
        Ok(TrainSession {
            arch: arch.clone(),
            config: config.clone(),
            model,
            adam: Adam::new(config.adam()),
            normalizer: *normalizer,
            epoch: 0,
            global_step: 0,
        })
    }

    /// Restores model weights, optimiser moments, and epoch position so the
    /// continued run matches an uninterrupted one bit for bit.
    pub fn resume(checkpoint: &Checkpoint, config: &TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let model = checkpoint.build_model()?;
        let mut adam = Adam::new(config.adam());
        if let Some(o) = &checkpoint.optim {
            adam.restore_state(o.t, o.m.clone(), o.v.clone());
        }
        let normalizer = checkpoint.meta.normalizer.ok_or_else(|| {
            TrainError::InvalidConfig("checkpoint carries no normaliser statistics".into())
        })?;
        Ok(TrainSession {
            arch: checkpoint.arch.clone(),
            config: config.clone(),
            model,
            adam,
            normalizer,
            epoch: checkpoint.meta.epoch,
            global_step: checkpoint.optim.as_ref().map(|o| o.t).unwrap_or(0),
        })
    }

    pub fn epochs_completed(&self) -> u64 {
        self.epoch
    }

    pub fn normalizer(&self) -> Normalizer {
        self.normalizer
    }

    /// Runs one epoch over `examples`, appending one history row per step.
    /// Returns the epoch's mean loss.
    pub fn run_one_epoch(
        &mut self,
        examples: &[SignalExample],
        history: &mut Vec<HistoryRow>,
    ) -> Result<f64, TrainError> {
        let stages = self.model.n_stages();
        let weights = self.config.weights_for(stages)?;
        let epoch = self.epoch;
        let seed = epoch_seed(self.config.seed, epoch);
        let batches = epoch_batches(
            examples,
            &self.normalizer,
            self.config.window,
            self.config.windows_per_example,
            self.config.batch_size,
            seed,
        )?;
        let mut sum = 0.0;
        let mut count = 0u64;
        for batch in batches {
            let (x, y) = batch_tensors(&batch);
            self.model.zero_grad();
            let outs = self.model.forward_stages_train(&x);
            let (loss, grads) = multi_stage_loss(self.config.loss, &outs, &y, &weights);
            if !loss.is_finite() {
                let stage_losses = outs
                    .iter()
                    .map(|o| crate::nn::loss::loss_and_grad(self.config.loss, o, &y).0)
                    .collect();
                return Err(TrainError::NanLoss {
                    epoch,
                    step: self.global_step,
                    stage_losses,
                });
            }
            self.model.backward_stages(&grads);
            let model = &mut self.model;
            self.adam.step(|f| model.visit("", f));
            history.push(HistoryRow {
                epoch,
                step: self.global_step,
                loss,
            });
            self.global_step += 1;
            sum += loss;
            count += 1;
        }
        self.epoch += 1;
        Ok(sum / count.max(1) as f64)
    }

    /// Mean multi-stage loss over a validation split, eval mode, one
    /// deterministic window (the signal head) per example.
    pub fn validation_loss(&self, examples: &[SignalExample]) -> Result<f64, TrainError> {
        if examples.is_empty() {
            return Err(TrainError::Data(DataError::EmptySplit));
        }
        let stages = self.model.n_stages();
        let weights = self.config.weights_for(stages)?;
        let mut sum = 0.0;
        for ex in examples {
            let n = ex.iq.i.len();
            if self.config.window > n {
                return Err(TrainError::Data(DataError::WindowTooLong {
                    w: self.config.window,
                    n,
                }));
            }
            let wnd =
                crate::data::windows::sample_window(ex, &self.normalizer, 0, self.config.window);
            let (x, y) = batch_tensors(std::slice::from_ref(&wnd));
            let outs = self.model.forward_stages_eval(&x);
            let mut loss = 0.0;
            for (o, &w) in outs.iter().zip(&weights) {
                loss += w * crate::nn::loss::loss_and_grad(self.config.loss, o, &y).0;
            }
            sum += loss;
        }
        Ok(sum / examples.len() as f64)
    }

    /// Snapshot with optimiser state, for cadence checkpoints and resume.
    pub fn snapshot(&mut self) -> Checkpoint {
        let (t, m, v) = self.adam.state();
        let optim = OptimState {
            t,
            m: m.to_vec(),
            v: v.to_vec(),
        };
        let meta = CheckpointMeta {
            epoch: self.epoch,
            train_seed: self.config.seed,
            normalizer: Some(self.normalizer),
        };
        Checkpoint::from_model(&self.arch, meta, &mut self.model, Some(optim))
    }
}
