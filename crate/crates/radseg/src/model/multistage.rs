//! Multi-stage refinement wrapper.
//!
//! Chains `n` identically shaped stages of one backbone. Stage 0 reads the
//! raw input; every later stage reads the previous stage's per-channel
//! sigmoid probabilities (or raw logits, switchable) and predicts the same
//! mask again. Training supervises every stage: the combined loss is a
//! weighted sum of per-stage losses, and gradients flow backwards through
//! the stage-to-stage feed.

use crate::nn::layers::sigmoid_scalar;
use crate::nn::loss::{loss_and_grad, LossKind};
use crate::nn::{Float, Layer, ParamView, TensorBCL};
use serde::{Deserialize, Serialize};

/// What a refinement stage consumes from its predecessor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageInput {
    #[default]
    Probabilities,
    Logits,
}

pub struct MsModel<T: Float, M: Layer<T>> {
    stages: Vec<M>,
    stage_input: StageInput,
    /// What stage `k+1` consumed, cached by `forward_stages_train` for the
    /// chain rule (needed only for the probabilities feed).
    fed: Vec<TensorBCL<T>>,
}

fn sigmoid_tensor<T: Float>(z: &TensorBCL<T>) -> TensorBCL<T> {
    let (b, c, l) = z.shape();
    let data = z.data().iter().map(|&v| sigmoid_scalar(v)).collect();
    TensorBCL::from_vec(b, c, l, data)
}

impl<T: Float, M: Layer<T>> MsModel<T, M> {
    pub fn from_stages(stages: Vec<M>, stage_input: StageInput) -> Self {
        assert!(!stages.is_empty(), "a model needs at least one stage");
        MsModel {
            stages,
            stage_input,
            fed: Vec::new(),
        }
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn stage_input(&self) -> StageInput {
        self.stage_input
    }

    pub fn stages_mut(&mut self) -> &mut [M] {
        &mut self.stages
    }

    /// Logits of every stage, training mode.
    pub fn forward_stages_train(&mut self, x: &TensorBCL<T>) -> Vec<TensorBCL<T>> {
        self.fed.clear();
        let mut outs = Vec::with_capacity(self.stages.len());
        outs.push(self.stages[0].forward_train(x));
        for k in 1..self.stages.len() {
            let inp = match self.stage_input {
                StageInput::Probabilities => sigmoid_tensor(&outs[k - 1]),
                StageInput::Logits => outs[k - 1].clone(),
            };
            let out = self.stages[k].forward_train(&inp);
            if self.stage_input == StageInput::Probabilities {
                self.fed.push(inp);
            }
            outs.push(out);
        }
        outs
    }

    /// Logits of every stage, eval mode.
    pub fn forward_stages_eval(&self, x: &TensorBCL<T>) -> Vec<TensorBCL<T>> {
        let mut outs = Vec::with_capacity(self.stages.len());
        outs.push(self.stages[0].forward_eval(x));
        for k in 1..self.stages.len() {
            let inp = match self.stage_input {
                StageInput::Probabilities => sigmoid_tensor(&outs[k - 1]),
                StageInput::Logits => outs[k - 1].clone(),
            };
            outs.push(self.stages[k].forward_eval(&inp));
        }
        outs
    }

    /// Backward from per-stage logit gradients; gradients flow through each
    /// stage and onwards through what it was fed. Returns the input gradient.
    pub fn backward_stages(&mut self, grads: &[TensorBCL<T>]) -> TensorBCL<T> {
        assert_eq!(
            grads.len(),
            self.stages.len(),
            "one logit gradient per stage"
        );
        let mut carry: Option<TensorBCL<T>> = None;
        let mut input_grad = None;
        for k in (0..self.stages.len()).rev() {
            let mut g = grads[k].clone();
            if let Some(extra) = carry.take() {
                for (dst, src) in g.data_mut().iter_mut().zip(extra.data()) {
                    *dst = *dst + *src;
                }
            }
            let dx = self.stages[k].backward(&g);
            if k > 0 {
                carry = Some(match self.stage_input {
                    StageInput::Probabilities => {
                        // d sigmoid = p * (1 - p), with p what stage k consumed.
                        let p = &self.fed[k - 1];
                        let (b, c, l) = dx.shape();
                        let data = dx
                            .data()
                            .iter()
                            .zip(p.data())
                            .map(|(&d, &pv)| d * pv * (T::ONE - pv))
                            .collect();
                        TensorBCL::from_vec(b, c, l, data)
                    }
                    StageInput::Logits => dx,
                });
            } else {
                input_grad = Some(dx);
            }
        }
        input_grad.expect("at least one stage")
    }
}

/// As a plain [`Layer`], a multi-stage model exposes its final stage's
/// logits; `backward` then corresponds to a loss on the final stage only.
impl<T: Float, M: Layer<T>> Layer<T> for MsModel<T, M> {
    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        self.forward_stages_train(x)
            .pop()
            .expect("at least one stage")
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        self.forward_stages_eval(x)
            .pop()
            .expect("at least one stage")
    }

    fn backward(&mut self, grad_out: &TensorBCL<T>) -> TensorBCL<T> {
        let (b, c, l) = grad_out.shape();
        let mut grads: Vec<TensorBCL<T>> = (0..self.stages.len() - 1)
            .map(|_| TensorBCL::zeros(b, c, l))
            .collect();
        grads.push(grad_out.clone());
        self.backward_stages(&grads)
    }

    fn zero_grad(&mut self) {
        for stage in self.stages.iter_mut() {
            stage.zero_grad();
        }
    }

    fn visit<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(ParamView<'a, T>)) {
        for (k, stage) in self.stages.iter_mut().enumerate() {
            stage.visit(&format!("{prefix}stage{k}."), f);
        }
    }
}

/// Weighted sum of one loss per stage against a shared target:
/// total = sum_k w_k * loss(logits_k, targets). Returns the total and the
/// per-stage logit gradients (already scaled by their weights).
pub fn multi_stage_loss<T: Float>(
    kind: LossKind,
    stage_logits: &[TensorBCL<T>],
    targets: &TensorBCL<T>,
    weights: &[f64],
) -> (f64, Vec<TensorBCL<T>>) {
    assert_eq!(
        stage_logits.len(),
        weights.len(),
        "one weight per stage"
    );
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(stage_logits.len());
    for (logits, &w) in stage_logits.iter().zip(weights) {
        let (loss, mut grad) = loss_and_grad(kind, logits, targets);
        total += w * loss;
        for g in grad.data_mut().iter_mut() {
            *g = *g * T::from_f64(w);
        }
        grads.push(grad);
    }
    (total, grads)
}

/// Builds a multi-stage U-Net. Stage 0 reads `config.in_channels`; later
/// stages read `config.out_channels`. Each stage draws its parameters from
/// an independent stream of `seed` tagged by the stage index.
pub fn ms_unet<T: Float>(
    config: &super::UNetConfig,
    n_stages: usize,
    seed: u64,
    stage_input: StageInput,
) -> MsModel<T, super::UNet1D<T>> {
    assert!(n_stages >= 1);
    let stages = (0..n_stages)
        .map(|k| {
            let mut cfg = config.clone();
            if k > 0 {
                cfg.in_channels = config.out_channels;
            }
            super::UNet1D::new(&cfg, &mut crate::rng::derive_rng(seed, &[k as u64]))
        })
        .collect();
    MsModel::from_stages(stages, stage_input)
}

/// Builds a multi-stage TCN with the same seeding scheme as [`ms_unet`].
pub fn ms_tcn<T: Float>(
    config: &super::TcnConfig,
    n_stages: usize,
    seed: u64,
    stage_input: StageInput,
) -> MsModel<T, super::Tcn<T>> {
    assert!(n_stages >= 1);
    let stages = (0..n_stages)
        .map(|k| {
            let mut cfg = config.clone();
            if k > 0 {
                cfg.in_channels = config.out_channels;
            }
            super::Tcn::new(&cfg, &mut crate::rng::derive_rng(seed, &[k as u64]))
        })
        .collect();
    MsModel::from_stages(stages, stage_input)
}
