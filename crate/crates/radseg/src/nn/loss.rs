//! Segmentation losses on logits.
//!
//! All three losses return the scalar (f64) and the gradient with respect
//! to the logits. BCE works on logits in the stable
//! `max(z,0) - z*y + ln(1+e^-|z|)` form; Dice and Huber apply a sigmoid
//! first and chain its derivative. BCE and Huber are means over all
//! elements; Dice is a single global ratio with smoothing 1.0.

use super::layers::sigmoid_scalar;
use super::tensor::TensorBCL;
use super::Float;
use serde::{Deserialize, Serialize};

pub const DICE_SMOOTHING: f64 = 1.0;
pub const HUBER_DELTA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Bce,
    Dice,
    Huber,
}

impl Default for LossKind {
    fn default() -> Self {
        LossKind::Bce
    }
}

/// Loss value and gradient with respect to `logits`.
pub fn loss_and_grad<T: Float>(
    kind: LossKind,
    logits: &TensorBCL<T>,
    targets: &TensorBCL<T>,
) -> (f64, TensorBCL<T>) {
    assert_eq!(logits.shape(), targets.shape(), "loss shape mismatch");
    match kind {
        LossKind::Bce => bce_with_logits(logits, targets),
        LossKind::Dice => dice_loss(logits, targets),
        LossKind::Huber => huber_loss(logits, targets),
    }
}

fn bce_with_logits<T: Float>(logits: &TensorBCL<T>, targets: &TensorBCL<T>) -> (f64, TensorBCL<T>) {
    let n = logits.numel() as f64;
    let mut total = 0.0f64;
    let mut grad = logits.clone();
    for (g, (&z, &y)) in grad
        .data_mut()
        .iter_mut()
        .zip(logits.data().iter().zip(targets.data()))
    {
        let zf = z.to_f64();
        let yf = y.to_f64();
        total += zf.max(0.0) - zf * yf + (-zf.abs()).exp().ln_1p();
        *g = T::from_f64((sigmoid_scalar(zf) - yf) / n);
    }
    (total / n, grad)
}

fn dice_loss<T: Float>(logits: &TensorBCL<T>, targets: &TensorBCL<T>) -> (f64, TensorBCL<T>) {
    let mut sum_py = 0.0f64;
    let mut sum_p = 0.0f64;
    let mut sum_y = 0.0f64;
    let probs: Vec<f64> = logits
        .data()
        .iter()
        .map(|&z| sigmoid_scalar(z.to_f64()))
        .collect();
    for (&p, &y) in probs.iter().zip(targets.data()) {
        sum_py += p * y.to_f64();
        sum_p += p;
        sum_y += y.to_f64();
    }
    let denom = sum_p + sum_y + DICE_SMOOTHING;
    let numer = 2.0 * sum_py + DICE_SMOOTHING;
    let loss = 1.0 - numer / denom;
    // d(loss)/dp_i = -(2*y_i*denom - numer) / denom^2, then chain p(1-p).
    let mut grad = logits.clone();
    for (g, (&p, &y)) in grad.data_mut().iter_mut().zip(probs.iter().zip(targets.data())) {
        let dp = -(2.0 * y.to_f64() * denom - numer) / (denom * denom);
        *g = T::from_f64(dp * p * (1.0 - p));
    }
    (loss, grad)
}

fn huber_loss<T: Float>(logits: &TensorBCL<T>, targets: &TensorBCL<T>) -> (f64, TensorBCL<T>) {
    let n = logits.numel() as f64;
    let mut total = 0.0f64;
    let mut grad = logits.clone();
    for (g, (&z, &y)) in grad
        .data_mut()
        .iter_mut()
        .zip(logits.data().iter().zip(targets.data()))
    {
        let p = sigmoid_scalar(z.to_f64());
        let r = p - y.to_f64();
        let (term, dr) = if r.abs() <= HUBER_DELTA {
            (0.5 * r * r, r)
        } else {
            (
                HUBER_DELTA * (r.abs() - 0.5 * HUBER_DELTA),
                HUBER_DELTA * r.signum(),
            )
        };
        total += term;
        *g = T::from_f64(dr * p * (1.0 - p) / n);
    }
    (total / n, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(z: f64, y: f64) -> (TensorBCL<f64>, TensorBCL<f64>) {
        (
            TensorBCL::from_vec(1, 1, 1, vec![z]),
            TensorBCL::from_vec(1, 1, 1, vec![y]),
        )
    }

    #[test]
    fn bce_zero_logit_target_one_is_ln_two() {
        let (z, y) = single(0.0, 1.0);
        let (loss, grad) = loss_and_grad(LossKind::Bce, &z, &y);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((grad.data()[0] - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn bce_extreme_logits_stay_finite() {
        let (z, y) = single(-800.0, 0.0);
        let (loss, _) = loss_and_grad(LossKind::Bce, &z, &y);
        assert!(loss.is_finite());
        assert!(loss.abs() < 1e-12);
        let (z, y) = single(800.0, 0.0);
        let (loss, _) = loss_and_grad(LossKind::Bce, &z, &y);
        assert!((loss - 800.0).abs() < 1e-9, "penalty grows linearly, got {loss}");
    }

    #[test]
    fn dice_perfect_prediction_near_zero() {
        let logits = TensorBCL::from_vec(1, 2, 4, vec![20.0, -20.0, 20.0, -20.0, -20.0, 20.0, 20.0, -20.0]);
        let targets = TensorBCL::from_vec(1, 2, 4, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        let (loss, _) = loss_and_grad(LossKind::Dice, &logits, &targets);
        assert!(loss.abs() < 1e-3, "got {loss}");
    }

    #[test]
    fn dice_all_wrong_near_one() {
        let logits = TensorBCL::from_vec(1, 1, 4, vec![20.0; 4]);
        let targets = TensorBCL::from_vec(1, 1, 4, vec![0.0; 4]);
        let (loss, _) = loss_and_grad(LossKind::Dice, &logits, &targets);
        assert!(loss > 0.7, "got {loss}");
    }

    #[test]
    fn huber_half_residual_costs_eighth() {
        // sigmoid(0) = 0.5, target 0 -> residual 0.5 -> 0.5 * 0.25.
        let logits = TensorBCL::from_vec(1, 1, 6, vec![0.0; 6]);
        let targets = TensorBCL::from_vec(1, 1, 6, vec![0.0; 6]);
        let (loss, grad) = loss_and_grad(LossKind::Huber, &logits, &targets);
        assert!((loss - 0.125).abs() < 1e-12);
        // dr = 0.5, sigmoid' = 0.25, n = 6.
        for &g in grad.data() {
            assert!((g - 0.5 * 0.25 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_kind_serde_names() {
        assert_eq!(serde_json::to_string(&LossKind::Bce).unwrap(), "\"bce\"");
        assert_eq!(
            serde_json::from_str::<LossKind>("\"dice\"").unwrap(),
            LossKind::Dice
        );
        assert!(serde_json::from_str::<LossKind>("\"mse\"").is_err());
    }

    #[test]
    #[should_panic(expected = "shape mismatch")]
    fn shape_mismatch_panics() {
        let z = TensorBCL::<f64>::zeros(1, 1, 2);
        let y = TensorBCL::<f64>::zeros(1, 1, 3);
        loss_and_grad(LossKind::Bce, &z, &y);
    }
}
