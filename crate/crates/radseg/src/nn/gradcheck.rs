//! Central finite-difference gradient oracle.
//!
//! Every analytic backward pass in this crate is checked against
//! `(f(x+h) - f(x-h)) / 2h` in f64 with h = 1e-5, on randomized small
//! shapes. The scalar objective is `sum(forward(x) * r)` for a random
//! weighting tensor `r`, so every output element influences the loss.

use super::layers::{BatchNorm1d, Conv1d, MaxPool1d, Relu, Sigmoid, TConv1d};
use super::loss::{loss_and_grad, LossKind};
use super::tensor::TensorBCL;
use super::{Layer, ParamKind};
use crate::rng::derive_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const PERTURBATION: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

/// Result of checking one layer kind over several seeds.
#[derive(Debug, Clone)]
pub struct GradReport {
    pub name: String,
    pub cases: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

impl GradReport {
    pub fn pass(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

fn scalar_objective<L: Layer<f64> + ?Sized>(layer: &mut L, x: &TensorBCL<f64>, r: &TensorBCL<f64>) -> f64 {
    layer.forward_train(x).dot_f64(r)
}

fn learnable_sizes<L: Layer<f64> + ?Sized>(layer: &mut L) -> Vec<usize> {
    let mut sizes = Vec::new();
    layer.visit("", &mut |v| {
        if v.kind == ParamKind::Learnable {
            sizes.push(v.values.len());
        }
    });
    sizes
}

fn add_to_param<L: Layer<f64> + ?Sized>(layer: &mut L, param_idx: usize, elem: usize, delta: f64) {
    let mut cur = 0;
    layer.visit("", &mut |v| {
        if v.kind == ParamKind::Learnable {
            if cur == param_idx {
                v.values[elem] += delta;
            }
            cur += 1;
        }
    });
}

fn copy_grads<L: Layer<f64> + ?Sized>(layer: &mut L) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    layer.visit("", &mut |v| {
        if v.kind == ParamKind::Learnable {
            out.push(v.grads.expect("learnable without grads").to_vec());
        }
    });
    out
}

/// Max relative error for one layer instance on one input, over every
/// parameter scalar and every input scalar.
pub fn check_layer_case<L: Layer<f64> + ?Sized>(
    layer: &mut L,
    x: &TensorBCL<f64>,
    rng: &mut ChaCha8Rng,
) -> f64 {
    layer.zero_grad();
    let y = layer.forward_train(x);
    let (b, c, l) = y.shape();
    let r = TensorBCL::random(b, c, l, -1.0, 1.0, rng);
    // Rebuild the caches consumed by nothing yet; forward_train above cached
    // x, and backward(r) consumes it.
    let analytic_input = {
        // backward needs the objective's gradient at the output, which for
        // sum(y * r) is r itself.
        layer.backward(&r)
    };
    let analytic_params = copy_grads(layer);

    let mut max_err = 0.0f64;
    let sizes = learnable_sizes(layer);
    for (pi, &len) in sizes.iter().enumerate() {
        for j in 0..len {
            add_to_param(layer, pi, j, PERTURBATION);
            let fp = scalar_objective(layer, x, &r);
            add_to_param(layer, pi, j, -2.0 * PERTURBATION);
            let fm = scalar_objective(layer, x, &r);
            add_to_param(layer, pi, j, PERTURBATION);
            let numeric = (fp - fm) / (2.0 * PERTURBATION);
            max_err = max_err.max(rel_err(analytic_params[pi][j], numeric));
        }
    }
    let mut xp = x.clone();
    for i in 0..x.numel() {
        let orig = xp.data()[i];
        xp.data_mut()[i] = orig + PERTURBATION;
        let fp = scalar_objective(layer, &xp, &r);
        xp.data_mut()[i] = orig - PERTURBATION;
        let fm = scalar_objective(layer, &xp, &r);
        xp.data_mut()[i] = orig;
        let numeric = (fp - fm) / (2.0 * PERTURBATION);
        max_err = max_err.max(rel_err(analytic_input.data()[i], numeric));
    }
    max_err
}

/// Max relative error of a loss gradient on one random case.
pub fn check_loss_case(kind: LossKind, rng: &mut ChaCha8Rng) -> f64 {
    let (b, c, l) = (2, 3, 7);
    let logits = TensorBCL::<f64>::random(b, c, l, -3.0, 3.0, rng);
    let targets = {
        let mut t = TensorBCL::<f64>::zeros(b, c, l);
        t.data_mut()
            .iter_mut()
            .for_each(|v| *v = if rng.gen::<bool>() { 1.0 } else { 0.0 });
        t
    };
    let (_, grad) = loss_and_grad(kind, &logits, &targets);
    let mut max_err = 0.0f64;
    let mut z = logits.clone();
    for i in 0..z.numel() {
        let orig = z.data()[i];
        z.data_mut()[i] = orig + PERTURBATION;
        let (fp, _) = loss_and_grad(kind, &z, &targets);
        z.data_mut()[i] = orig - PERTURBATION;
        let (fm, _) = loss_and_grad(kind, &z, &targets);
        z.data_mut()[i] = orig;
        let numeric = (fp - fm) / (2.0 * PERTURBATION);
        max_err = max_err.max(rel_err(grad.data()[i], numeric));
    }
    max_err
}

fn layer_report(
    name: &str,
    case_id: u64,
    seeds: usize,
    build: impl Fn(&mut ChaCha8Rng) -> (Box<dyn Layer<f64>>, TensorBCL<f64>),
) -> GradReport {
    let mut max_err = 0.0f64;
    for seed in 0..seeds {
        let mut rng = derive_rng(0x6AD_C8EC, &[case_id, seed as u64]);
        let (mut layer, x) = build(&mut rng);
        max_err = max_err.max(check_layer_case(layer.as_mut(), &x, &mut rng));
    }
    GradReport {
        name: name.to_string(),
        cases: seeds,
        max_rel_err: max_err,
        tolerance: TOLERANCE,
    }
}

fn loss_report(name: &str, kind: LossKind, case_id: u64, seeds: usize) -> GradReport {
    let mut max_err = 0.0f64;
    for seed in 0..seeds {
        let mut rng = derive_rng(0x6AD_C8EC, &[case_id, seed as u64]);
        max_err = max_err.max(check_loss_case(kind, &mut rng));
    }
    GradReport {
        name: name.to_string(),
        cases: seeds,
        max_rel_err: max_err,
        tolerance: TOLERANCE,
    }
}

/// Runs the oracle on every layer kind and loss, `seeds` random shapes each.
pub fn run_suite(seeds: usize) -> Vec<GradReport> {
    vec![
        layer_report("conv1d_k3_d1", 1, seeds, |rng| {
            let layer = Conv1d::new(3, 4, 3, 1, rng);
            let x = TensorBCL::random(2, 3, 9, -2.0, 2.0, rng);
            (Box::new(layer), x)
        }),
        layer_report("conv1d_k3_d2", 2, seeds, |rng| {
            let layer = Conv1d::new(2, 3, 3, 2, rng);
            let x = TensorBCL::random(2, 2, 12, -2.0, 2.0, rng);
            (Box::new(layer), x)
        }),
        layer_report("conv1d_k3_d4", 3, seeds, |rng| {
            let layer = Conv1d::new(2, 2, 3, 4, rng);
            let x = TensorBCL::random(1, 2, 16, -2.0, 2.0, rng);
            (Box::new(layer), x)
        }),
        layer_report("conv1d_k1", 4, seeds, |rng| {
            let layer = Conv1d::new(3, 2, 1, 1, rng);
            let x = TensorBCL::random(2, 3, 7, -2.0, 2.0, rng);
            (Box::new(layer), x)
        }),
        layer_report("tconv1d", 5, seeds, |rng| {
            let layer = TConv1d::new(3, 2, rng);
            let x = TensorBCL::random(2, 3, 6, -2.0, 2.0, rng);
            (Box::new(layer), x)
        }),
        layer_report("maxpool1d", 6, seeds, |rng| {
            let layer = MaxPool1d::new();
            let x = TensorBCL::random(2, 3, 8, -2.0, 2.0, rng);
            (Box::new(layer), x)
        }),
        layer_report("batchnorm1d", 7, seeds, |rng| {
            let layer = BatchNorm1d::new(3);
            let x = TensorBCL::random(2, 3, 6, -2.0, 2.0, rng);
            (Box::new(layer), x)
        }),
        layer_report("relu", 8, seeds, |rng| {
            let layer = Relu::new();
            let x = TensorBCL::random(2, 2, 9, -2.0, 2.0, rng);
            (Box::new(layer), x)
        }),
        layer_report("sigmoid", 9, seeds, |rng| {
            let layer = Sigmoid::new();
            let x = TensorBCL::random(2, 2, 9, -4.0, 4.0, rng);
            (Box::new(layer), x)
        }),
        loss_report("loss_bce", LossKind::Bce, 10, seeds),
        loss_report("loss_dice", LossKind::Dice, 11, seeds),
        loss_report("loss_huber", LossKind::Huber, 12, seeds),
    ]
}
