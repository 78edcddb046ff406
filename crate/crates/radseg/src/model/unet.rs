//! 1D U-Net backbone.
//!
//! `depth` resolution levels: `depth - 1` encoder levels of two
//! (conv3 -> batchnorm -> ReLU) blocks followed by a stride-2 max pool,
//! a bottleneck of the same double block at `base * 2^(depth-1)` channels,
//! and a mirrored decoder where each level upsamples with a stride-2
//! transposed conv (halving channels), concatenates the matching encoder
//! skip, and applies another double block. A final kernel-1 conv maps to
//! the output channels with no activation: outputs are logits.

use super::ModelError;
use crate::nn::layers::{concat_channels, split_channels, BatchNorm1d, Conv1d, MaxPool1d, Relu, TConv1d};
use crate::nn::{Float, Layer, ParamView, TensorBCL};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UNetConfig {
    pub in_channels: usize,
    pub out_channels: usize,
    pub base_channels: usize,
    /// Resolution levels including the bottleneck; 5 means 4 poolings.
    pub depth: usize,
}

impl Default for UNetConfig {
    fn default() -> Self {
        UNetConfig {
            in_channels: 2,
            out_channels: 5,
            base_channels: 64,
            depth: 5,
        }
    }
}

impl UNetConfig {
    /// Input length must be a multiple of this (one halving per pool).
    pub fn pool_factor(&self) -> usize {
        1 << (self.depth - 1)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.depth < 2 {
            return Err(ModelError::InvalidConfig(
                "depth must be at least 2 (one encoder level plus bottleneck)".into(),
            ));
        }
        if self.in_channels == 0 || self.out_channels == 0 || self.base_channels == 0 {
            return Err(ModelError::InvalidConfig(
                "channel counts must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn check_length(&self, len: usize) -> Result<(), ModelError> {
        let m = self.pool_factor();
        if len == 0 || len % m != 0 {
            return Err(ModelError::BadLength { len, multiple: m });
        }
        Ok(())
    }

    /// Learnable parameter count, counted arithmetically rather than by
    /// building the network.
    pub fn param_count(&self) -> usize {
        let conv3 = |cin: usize, cout: usize| cin * cout * 3 + cout;
        let bn = |c: usize| 2 * c;
        let mut total = 0;
        let mut cin = self.in_channels;
        for level in 0..self.depth - 1 {
            let c = self.base_channels << level;
            total += conv3(cin, c) + bn(c) + conv3(c, c) + bn(c);
            cin = c;
        }
        let cb = self.base_channels << (self.depth - 1);
        total += conv3(cin, cb) + bn(cb) + conv3(cb, cb) + bn(cb);
        for level in (0..self.depth - 1).rev() {
            let c = self.base_channels << level;
            // Transposed conv kernel 2: (2c -> c), then double block on 2c.
            total += (2 * c) * c * 2 + c;
            total += conv3(2 * c, c) + bn(c) + conv3(c, c) + bn(c);
        }
        total += self.base_channels * self.out_channels + self.out_channels;
        total
    }
}

/// conv3 -> batchnorm -> ReLU.
struct ConvBnRelu<T: Float> {
    conv: Conv1d<T>,
    bn: BatchNorm1d<T>,
    relu: Relu<T>,
}

impl<T: Float> ConvBnRelu<T> {
    fn new(in_c: usize, out_c: usize, rng: &mut impl Rng) -> Self {
        ConvBnRelu {
            conv: Conv1d::new(in_c, out_c, 3, 1, rng),
            bn: BatchNorm1d::new(out_c),
            relu: Relu::new(),
        }
    }

    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let h = self.conv.forward_train(x);
        let h = self.bn.forward_train(&h);
        self.relu.forward_train(&h)
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let h = self.conv.forward_eval(x);
        let h = self.bn.forward_eval(&h);
        self.relu.forward_eval(&h)
    }

    fn backward(&mut self, g: &TensorBCL<T>) -> TensorBCL<T> {
        let g = self.relu.backward(g);
        let g = self.bn.backward(&g);
        self.conv.backward(&g)
    }

    fn zero_grad(&mut self) {
        self.conv.zero_grad();
        self.bn.zero_grad();
    }

    fn visit<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(ParamView<'a, T>)) {
        self.conv.visit(&format!("{prefix}conv."), f);
        self.bn.visit(&format!("{prefix}bn."), f);
    }
}

struct DoubleConv<T: Float> {
    a: ConvBnRelu<T>,
    b: ConvBnRelu<T>,
}

impl<T: Float> DoubleConv<T> {
    fn new(in_c: usize, out_c: usize, rng: &mut impl Rng) -> Self {
        DoubleConv {
            a: ConvBnRelu::new(in_c, out_c, rng),
            b: ConvBnRelu::new(out_c, out_c, rng),
        }
    }

    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let h = self.a.forward_train(x);
        self.b.forward_train(&h)
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let h = self.a.forward_eval(x);
        self.b.forward_eval(&h)
    }

    fn backward(&mut self, g: &TensorBCL<T>) -> TensorBCL<T> {
        let g = self.b.backward(g);
        self.a.backward(&g)
    }

    fn zero_grad(&mut self) {
        self.a.zero_grad();
        self.b.zero_grad();
    }

    fn visit<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(ParamView<'a, T>)) {
        self.a.visit(&format!("{prefix}0."), f);
        self.b.visit(&format!("{prefix}1."), f);
    }
}

struct EncLevel<T: Float> {
    block: DoubleConv<T>,
    pool: MaxPool1d<T>,
}

struct DecLevel<T: Float> {
    up: TConv1d<T>,
    block: DoubleConv<T>,
}

pub struct UNet1D<T: Float> {
    config: UNetConfig,
    enc: Vec<EncLevel<T>>,
    bottleneck: DoubleConv<T>,
    /// dec[i] mirrors enc[i]; forward runs them deepest first.
    dec: Vec<DecLevel<T>>,
    final_conv: Conv1d<T>,
    /// Skip-path input gradients staged by decoder backward for encoder
    /// backward, indexed by level.
    skip_grads: Vec<Option<TensorBCL<T>>>,
}

impl<T: Float> UNet1D<T> {
    /// Draws parameters from `rng` in a fixed order, so equal seeds build
    /// bit-identical networks.
    pub fn new(config: &UNetConfig, rng: &mut impl Rng) -> Self {
        config.validate().expect("invalid UNet config");
        let b = config.base_channels;
        let mut enc = Vec::new();
        let mut cin = config.in_channels;
        for level in 0..config.depth - 1 {
            let c = b << level;
            enc.push(EncLevel {
                block: DoubleConv::new(cin, c, rng),
                pool: MaxPool1d::new(),
            });
            cin = c;
        }
        let cb = b << (config.depth - 1);
        let bottleneck = DoubleConv::new(cin, cb, rng);
        let mut dec = Vec::new();
        for level in 0..config.depth - 1 {
            let c = b << level;
            dec.push(DecLevel {
                up: TConv1d::new(2 * c, c, rng),
                block: DoubleConv::new(2 * c, c, rng),
            });
        }
        let final_conv = Conv1d::new(b, config.out_channels, 1, 1, rng);
        let depth = config.depth;
        UNet1D {
            config: config.clone(),
            enc,
            bottleneck,
            dec,
            final_conv,
            skip_grads: (0..depth - 1).map(|_| None).collect(),
        }
    }

    pub fn config(&self) -> &UNetConfig {
        &self.config
    }

    fn check_input(&self, x: &TensorBCL<T>) {
        assert_eq!(
            x.channels(),
            self.config.in_channels,
            "input has {} channels, model expects {}",
            x.channels(),
            self.config.in_channels
        );
        if let Err(e) = self.config.check_length(x.length()) {
            panic!("{e}");
        }
    }
}

impl<T: Float> Layer<T> for UNet1D<T> {
    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        self.check_input(x);
        let mut skips = Vec::with_capacity(self.enc.len());
        let mut h = x.clone();
        for level in self.enc.iter_mut() {
            let s = level.block.forward_train(&h);
            h = level.pool.forward_train(&s);
            skips.push(s);
        }
        h = self.bottleneck.forward_train(&h);
        for (level, skip) in self.dec.iter_mut().zip(skips.iter()).rev() {
            let up = level.up.forward_train(&h);
            let cat = concat_channels(&up, skip);
            h = level.block.forward_train(&cat);
        }
        self.final_conv.forward_train(&h)
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        self.check_input(x);
        let mut skips = Vec::with_capacity(self.enc.len());
        let mut h = x.clone();
        for level in self.enc.iter() {
            let s = level.block.forward_eval(&h);
            h = level.pool.forward_eval(&s);
            skips.push(s);
        }
        h = self.bottleneck.forward_eval(&h);
        for (level, skip) in self.dec.iter().zip(skips.iter()).rev() {
            let up = level.up.forward_eval(&h);
            let cat = concat_channels(&up, skip);
            h = level.block.forward_eval(&cat);
        }
        self.final_conv.forward_eval(&h)
    }

    fn backward(&mut self, grad_out: &TensorBCL<T>) -> TensorBCL<T> {
        let mut g = self.final_conv.backward(grad_out);
        // Decoder ran deepest level first, so backward walks shallow to deep.
        for (i, level) in self.dec.iter_mut().enumerate() {
            let c = self.config.base_channels << i;
            let cat_grad = level.block.backward(&g);
            let (up_grad, skip_grad) = split_channels(&cat_grad, c);
            self.skip_grads[i] = Some(skip_grad);
            g = level.up.backward(&up_grad);
        }
        g = self.bottleneck.backward(&g);
        for (i, level) in self.enc.iter_mut().enumerate().rev() {
            let mut s_grad = level.pool.backward(&g);
            let extra = self.skip_grads[i]
                .take()
                .expect("decoder backward populates every skip gradient");
            for (dst, src) in s_grad.data_mut().iter_mut().zip(extra.data()) {
                *dst = *dst + *src;
            }
            g = level.block.backward(&s_grad);
        }
        g
    }

    fn zero_grad(&mut self) {
        for level in self.enc.iter_mut() {
            level.block.zero_grad();
        }
        self.bottleneck.zero_grad();
        for level in self.dec.iter_mut() {
            level.up.zero_grad();
            level.block.zero_grad();
        }
        self.final_conv.zero_grad();
    }

    fn visit<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(ParamView<'a, T>)) {
        for (i, level) in self.enc.iter_mut().enumerate() {
            level.block.visit(&format!("{prefix}enc{i}."), f);
        }
        self.bottleneck.visit(&format!("{prefix}bottleneck."), f);
        for (i, level) in self.dec.iter_mut().enumerate() {
            level.up.visit(&format!("{prefix}dec{i}.up."), f);
            level.block.visit(&format!("{prefix}dec{i}."), f);
        }
        self.final_conv.visit(&format!("{prefix}final."), f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::learnable_count;
    use crate::rng::derive_rng;

    fn tiny_config() -> UNetConfig {
        UNetConfig {
            in_channels: 2,
            out_channels: 5,
            base_channels: 4,
            depth: 3,
        }
    }

    #[test]
    fn reference_parameter_count() {
        let config = UNetConfig::default();
        assert_eq!(config.param_count(), 10_824_581);
        let mut model: UNet1D<f32> = UNet1D::new(&config, &mut derive_rng(0, &[0]));
        assert_eq!(learnable_count(&mut model), 10_824_581);
    }

    #[test]
    fn small_base_parameter_count_matches_formula() {
        let config = UNetConfig {
            base_channels: 8,
            ..UNetConfig::default()
        };
        let mut model: UNet1D<f32> = UNet1D::new(&config, &mut derive_rng(0, &[1]));
        assert_eq!(learnable_count(&mut model), config.param_count());
    }

    #[test]
    fn output_shape_and_purity() {
        let config = tiny_config();
        let model: UNet1D<f32> = UNet1D::new(&config, &mut derive_rng(3, &[0]));
        let x = TensorBCL::random(2, 2, 64, -1.0, 1.0, &mut derive_rng(3, &[1]));
        let y1 = model.forward_eval(&x);
        assert_eq!(y1.shape(), (2, 5, 64));
        let y2 = model.forward_eval(&x);
        assert_eq!(y1.data(), y2.data());
    }

    #[test]
    #[should_panic(expected = "multiple of 4")]
    fn rejects_length_not_divisible_by_pool_factor() {
        let config = tiny_config();
        let model: UNet1D<f32> = UNet1D::new(&config, &mut derive_rng(4, &[0]));
        let x = TensorBCL::zeros(1, 2, 30);
        model.forward_eval(&x);
    }

    #[test]
    fn default_config_needs_multiples_of_16() {
        let config = UNetConfig::default();
        assert_eq!(config.pool_factor(), 16);
        assert!(config.check_length(4096).is_ok());
        assert_eq!(
            config.check_length(100),
            Err(ModelError::BadLength {
                len: 100,
                multiple: 16
            })
        );
    }

    #[test]
    fn zeroed_final_layer_gives_zero_logits() {
        let config = tiny_config();
        let mut model: UNet1D<f32> = UNet1D::new(&config, &mut derive_rng(5, &[0]));
        let zeros_w = vec![0.0f32; config.base_channels * config.out_channels];
        let zeros_b = vec![0.0f32; config.out_channels];
        model.final_conv.set_weights(&zeros_w, &zeros_b);
        let x = TensorBCL::random(1, 2, 32, -1.0, 1.0, &mut derive_rng(5, &[1]));
        let y = model.forward_eval(&x);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_builds_identical_models() {
        let config = tiny_config();
        let mut a: UNet1D<f32> = UNet1D::new(&config, &mut derive_rng(9, &[0]));
        let mut b: UNet1D<f32> = UNet1D::new(&config, &mut derive_rng(9, &[0]));
        let mut va = Vec::new();
        a.visit("", &mut |p| va.push((p.name, p.values.to_vec())));
        let mut vb = Vec::new();
        b.visit("", &mut |p| vb.push((p.name, p.values.to_vec())));
        assert_eq!(va, vb);
        let mut c: UNet1D<f32> = UNet1D::new(&config, &mut derive_rng(10, &[0]));
        let mut vc = Vec::new();
        c.visit("", &mut |p| vc.push((p.name, p.values.to_vec())));
        assert_ne!(va, vc);
    }

    #[test]
    fn training_step_reaches_every_learnable_parameter() {
        let config = UNetConfig {
            in_channels: 2,
            out_channels: 2,
            base_channels: 2,
            depth: 3,
        };
        let mut model: UNet1D<f64> = UNet1D::new(&config, &mut derive_rng(11, &[0]));
        let x = TensorBCL::random(2, 2, 16, -1.0, 1.0, &mut derive_rng(11, &[1]));
        model.zero_grad();
        let y = model.forward_train(&x);
        let ones = TensorBCL::from_vec(y.batch(), y.channels(), y.length(),
            vec![1.0; y.numel()]);
        let gx = model.backward(&ones);
        assert_eq!(gx.shape(), x.shape());
        let mut zero_grads = Vec::new();
        let mut total = 0usize;
        model.visit("", &mut |p| {
            if let Some(grads) = p.grads {
                total += 1;
                if grads.iter().all(|&g| g == 0.0) {
                    zero_grads.push(p.name.clone());
                }
            }
        });
        assert!(total > 20);
        assert!(
            zero_grads.is_empty(),
            "tensors with all-zero gradients: {zero_grads:?}"
        );
    }

    #[test]
    fn gradcheck_on_a_tiny_unet() {
        use crate::nn::gradcheck::{check_layer_case, TOLERANCE};
        let config = UNetConfig {
            in_channels: 2,
            out_channels: 2,
            base_channels: 2,
            depth: 2,
        };
        let mut worst = 0.0f64;
        for seed in 0..3 {
            let mut model: UNet1D<f64> = UNet1D::new(&config, &mut derive_rng(20, &[seed]));
            let mut rng = derive_rng(21, &[seed]);
            let x = TensorBCL::random(2, 2, 8, -1.0, 1.0, &mut rng);
            let err = check_layer_case(&mut model, &x, &mut rng);
            worst = worst.max(err);
        }
        assert!(worst < TOLERANCE, "max rel err {worst}");
    }
}
