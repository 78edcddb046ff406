//! Dilated temporal convolutional network backbone.
//!
//! A kernel-1 conv lifts the input to a fixed feature width, then a stack
//! of residual blocks applies kernel-3 convs with dilation doubling per
//! block (1, 2, 4, ...), each followed by ReLU and a kernel-1 conv before
//! the residual add. A final kernel-1 conv maps to output logits. Length
//! is preserved at every block, so any input length works.

use super::ModelError;
use crate::nn::layers::{Conv1d, Relu};
use crate::nn::{Float, Layer, ParamView, TensorBCL};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TcnConfig {
    pub in_channels: usize,
    pub out_channels: usize,
    pub feature_channels: usize,
    /// Residual blocks; block `l` dilates by `2^l`.
    pub blocks: usize,
}

impl Default for TcnConfig {
    fn default() -> Self {
        TcnConfig {
            in_channels: 2,
            out_channels: 5,
            feature_channels: 512,
            blocks: 10,
        }
    }
}

impl TcnConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.in_channels == 0
            || self.out_channels == 0
            || self.feature_channels == 0
            || self.blocks == 0
        {
            return Err(ModelError::InvalidConfig(
                "TCN channel and block counts must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Samples a single output position can see: `1 + 2 * (2^blocks - 1)`.
    pub fn receptive_field(&self) -> usize {
        1 + 2 * ((1usize << self.blocks) - 1)
    }

    pub fn param_count(&self) -> usize {
        let f = self.feature_channels;
        let mut total = self.in_channels * f + f;
        total += self.blocks * ((f * f * 3 + f) + (f * f + f));
        total += f * self.out_channels + self.out_channels;
        total
    }
}

struct ResBlock<T: Float> {
    dilated: Conv1d<T>,
    relu: Relu<T>,
    proj: Conv1d<T>,
}

impl<T: Float> ResBlock<T> {
    fn new(f: usize, dilation: usize, rng: &mut impl Rng) -> Self {
        ResBlock {
            dilated: Conv1d::new(f, f, 3, dilation, rng),
            relu: Relu::new(),
            proj: Conv1d::new(f, f, 1, 1, rng),
        }
    }

    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let h = self.dilated.forward_train(x);
        let h = self.relu.forward_train(&h);
        let h = self.proj.forward_train(&h);
        let mut y = x.clone();
        for (dst, src) in y.data_mut().iter_mut().zip(h.data()) {
            *dst = *dst + *src;
        }
        y
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let h = self.dilated.forward_eval(x);
        let h = self.relu.forward_eval(&h);
        let h = self.proj.forward_eval(&h);
        let mut y = x.clone();
        for (dst, src) in y.data_mut().iter_mut().zip(h.data()) {
            *dst = *dst + *src;
        }
        y
    }

    fn backward(&mut self, g: &TensorBCL<T>) -> TensorBCL<T> {
        let h = self.proj.backward(g);
        let h = self.relu.backward(&h);
        let mut dx = self.dilated.backward(&h);
        for (dst, src) in dx.data_mut().iter_mut().zip(g.data()) {
            *dst = *dst + *src;
        }
        dx
    }

    fn zero_grad(&mut self) {
        self.dilated.zero_grad();
        self.proj.zero_grad();
    }

    fn visit<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(ParamView<'a, T>)) {
        self.dilated.visit(&format!("{prefix}dilated."), f);
        self.proj.visit(&format!("{prefix}proj."), f);
    }
}

pub struct Tcn<T: Float> {
    config: TcnConfig,
    input_proj: Conv1d<T>,
    blocks: Vec<ResBlock<T>>,
    output_proj: Conv1d<T>,
}

impl<T: Float> Tcn<T> {
    pub fn new(config: &TcnConfig, rng: &mut impl Rng) -> Self {
        config.validate().expect("invalid TCN config");
        let f = config.feature_channels;
        let input_proj = Conv1d::new(config.in_channels, f, 1, 1, rng);
        let blocks = (0..config.blocks)
            .map(|l| ResBlock::new(f, 1 << l, rng))
            .collect();
        let output_proj = Conv1d::new(f, config.out_channels, 1, 1, rng);
        Tcn {
            config: config.clone(),
            input_proj,
            blocks,
            output_proj,
        }
    }

    pub fn config(&self) -> &TcnConfig {
        &self.config
    }
}

impl<T: Float> Layer<T> for Tcn<T> {
    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let mut h = self.input_proj.forward_train(x);
        for block in self.blocks.iter_mut() {
            h = block.forward_train(&h);
        }
        self.output_proj.forward_train(&h)
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let mut h = self.input_proj.forward_eval(x);
        for block in self.blocks.iter() {
            h = block.forward_eval(&h);
        }
        self.output_proj.forward_eval(&h)
    }

    fn backward(&mut self, grad_out: &TensorBCL<T>) -> TensorBCL<T> {
        let mut g = self.output_proj.backward(grad_out);
        for block in self.blocks.iter_mut().rev() {
            g = block.backward(&g);
        }
        self.input_proj.backward(&g)
    }

    fn zero_grad(&mut self) {
        self.input_proj.zero_grad();
        for block in self.blocks.iter_mut() {
            block.zero_grad();
        }
        self.output_proj.zero_grad();
    }

    fn visit<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(ParamView<'a, T>)) {
        self.input_proj.visit(&format!("{prefix}in."), f);
        for (l, block) in self.blocks.iter_mut().enumerate() {
            block.visit(&format!("{prefix}block{l}."), f);
        }
        self.output_proj.visit(&format!("{prefix}out."), f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::learnable_count;
    use crate::rng::derive_rng;

    fn tiny_config() -> TcnConfig {
        TcnConfig {
            in_channels: 2,
            out_channels: 5,
            feature_channels: 8,
            blocks: 3,
        }
    }

    #[test]
    fn default_receptive_field_is_2047() {
        assert_eq!(TcnConfig::default().receptive_field(), 2047);
        assert_eq!(tiny_config().receptive_field(), 15);
    }

    #[test]
    fn parameter_count_matches_formula() {
        let config = tiny_config();
        let mut model: Tcn<f32> = Tcn::new(&config, &mut derive_rng(0, &[0]));
        assert_eq!(learnable_count(&mut model), config.param_count());
        // Default width for reference: the formula, not a build.
        assert_eq!(TcnConfig::default().param_count(), 10_500_101);
    }

    #[test]
    fn preserves_arbitrary_lengths() {
        let config = tiny_config();
        let mut model: Tcn<f32> = Tcn::new(&config, &mut derive_rng(1, &[0]));
        for l in [1usize, 7, 50, 100] {
            let x = TensorBCL::random(1, 2, l, -1.0, 1.0, &mut derive_rng(1, &[l as u64]));
            let y = model.forward_train(&x);
            assert_eq!(y.shape(), (1, 5, l));
        }
    }

    #[test]
    fn disturbance_spreads_no_further_than_receptive_field() {
        let config = tiny_config();
        let model: Tcn<f32> = Tcn::new(&config, &mut derive_rng(2, &[0]));
        let l = 64;
        let center = 32;
        let x = TensorBCL::random(1, 2, l, -1.0, 1.0, &mut derive_rng(2, &[1]));
        let mut x2 = x.clone();
        let i = x2.idx(0, 0, center);
        x2.data_mut()[i] += 10.0;
        let y1 = model.forward_eval(&x);
        let y2 = model.forward_eval(&x2);
        let half = (config.receptive_field() - 1) / 2;
        for pos in 0..l {
            let changed = (0..5).any(|c| y1.get(0, c, pos) != y2.get(0, c, pos));
            let reachable = pos.abs_diff(center) <= half;
            if !reachable {
                assert!(!changed, "position {pos} outside RF changed");
            }
        }
        // The perturbed position itself must respond.
        assert!((0..5).any(|c| y1.get(0, c, center) != y2.get(0, c, center)));
    }

    #[test]
    fn gradcheck_on_a_tiny_tcn() {
        use crate::nn::gradcheck::{check_layer_case, TOLERANCE};
        let config = TcnConfig {
            in_channels: 2,
            out_channels: 2,
            feature_channels: 3,
            blocks: 2,
        };
        let mut worst = 0.0f64;
        for seed in 0..3 {
            let mut model: Tcn<f64> = Tcn::new(&config, &mut derive_rng(30, &[seed]));
            let mut rng = derive_rng(31, &[seed]);
            let x = TensorBCL::random(2, 2, 10, -1.0, 1.0, &mut rng);
            let err = check_layer_case(&mut model, &x, &mut rng);
            worst = worst.max(err);
        }
        assert!(worst < TOLERANCE, "max rel err {worst}");
    }
}
