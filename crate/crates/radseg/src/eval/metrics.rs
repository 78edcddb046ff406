//! Mask-overlap metrics with the skip rule for empty denominators.
//!
//! F1 is micro-averaged over every (channel, sample) position of an
//! example; Dice and IoU are computed per channel and averaged over
//! channels. A metric is `None` ("skip") when its denominator would be
//! zero: F1 when TP+FP+FN = 0, a Dice/IoU channel when prediction and
//! truth are both empty. Skipped values never enter any mean.

use crate::data::SegMask;

/// Threshold rule: probability ≥ 0.5 maps to positive, so a zero-logit
/// model (sigmoid = 0.5 everywhere) predicts all ones.
pub fn binarize(p: f32) -> bool {
    p >= 0.5
}

pub fn binarize_mask(probs: &[f32], channels: usize, n: usize) -> SegMask {
    assert_eq!(probs.len(), channels * n, "probability buffer shape mismatch");
    let mut mask = SegMask::new(channels, n);
    for c in 0..channels {
        for l in 0..n {
            if binarize(probs[c * n + l]) {
                mask.set(c, l, true);
            }
        }
    }
    mask
}

fn assert_same_shape(pred: &SegMask, gt: &SegMask) {
    assert_eq!(
        (pred.channels(), pred.len()),
        (gt.channels(), gt.len()),
        "mask shape mismatch"
    );
}

/// Micro F1 over all positions: 2TP / (2TP + FP + FN); `None` when the
/// example has no positives anywhere in prediction or truth.
pub fn metric_f1(pred: &SegMask, gt: &SegMask) -> Option<f64> {
    assert_same_shape(pred, gt);
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for c in 0..gt.channels() {
        for l in 0..gt.len() {
            match (pred.get(c, l), gt.get(c, l)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    if tp + fp + fn_ == 0 {
        return None;
    }
    Some(2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fn_ as f64))
}

/// One channel's (dice, iou); `None` when both masks are empty there.
pub fn channel_dice_iou(pred: &SegMask, gt: &SegMask, c: usize) -> Option<(f64, f64)> {
    assert_same_shape(pred, gt);
    let mut inter = 0u64;
    let mut a = 0u64;
    let mut b = 0u64;
    for l in 0..gt.len() {
        let p = pred.get(c, l);
        let g = gt.get(c, l);
        if p {
            a += 1;
        }
        if g {
            b += 1;
        }
        if p && g {
            inter += 1;
        }
    }
    if a + b == 0 {
        return None;
    }
    let dice = 2.0 * inter as f64 / (a + b) as f64;
    let union = a + b - inter;
    let iou = inter as f64 / union as f64;
    Some((dice, iou))
}

/// Channel-mean (dice, iou) over the non-skipped channels; `None` when
/// every channel is empty on both sides.
pub fn metric_dice_iou(pred: &SegMask, gt: &SegMask) -> Option<(f64, f64)> {
    assert_same_shape(pred, gt);
    let mut dice_sum = 0.0;
    let mut iou_sum = 0.0;
    let mut n = 0usize;
    for c in 0..gt.channels() {
        if let Some((dice, iou)) = channel_dice_iou(pred, gt, c) {
            dice_sum += dice;
            iou_sum += iou;
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    Some((dice_sum / n as f64, iou_sum / n as f64))
}
