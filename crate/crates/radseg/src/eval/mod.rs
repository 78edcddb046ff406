//! Inference over a dataset split and SNR-binned metric aggregation.
//!
//! Each example is tiled into fixed-length windows (the last tile is
//! right-aligned so every sample is covered exactly once per pass, with
//! later tiles winning on overlap), run through the model in eval mode,
//! thresholded, and scored against its truth mask. Scores are grouped by
//! the example's exact SNR grid value; each bin reports mean, population
//! standard deviation, and the count of examples that contributed, with
//! skipped metrics excluded per the rules in [`metrics`].

pub mod energy;
pub mod metrics;
pub mod report;

pub use energy::{energy_detector, energy_detector_with};
pub use metrics::{binarize, binarize_mask, channel_dice_iou, metric_dice_iou, metric_f1};
pub use report::{render_svg_chart, render_text_table, write_metrics_csv, Metric};

use crate::data::{DataError, Dataset, Normalizer, SegMask};
use crate::model::AnyModel;
use crate::nn::layers::sigmoid_scalar;
use crate::nn::TensorBCL;
use crate::synth::SignalExample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset has no embedded normalizer and none was supplied")]
    MissingNormalizer,
    #[error("no metrics bin at {snr_db} dB")]
    BinMismatch { snr_db: f64 },
    #[error("reports disagree on bins or settings: {0}")]
    MismatchedReports(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Inference settings. `window` is the tile length fed to the model and
/// must satisfy the model's length requirement (a multiple of 16 for the
/// encoder-decoder backbone). `threshold` is the probability cut for a
/// positive sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub window: usize,
    pub threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            window: 4096,
            threshold: 0.5,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.window == 0 {
            return Err(DataError::WindowTooLong { w: 0, n: 0 }.into());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(EvalError::MismatchedReports(format!(
                "threshold {} outside (0, 1)",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Model-free predictors evaluated through the same pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// Reads the truth mask; ceiling check for the metric plumbing.
    Oracle,
    /// Predicts nothing anywhere; floor check.
    AllZero,
    /// Threshold detector over instantaneous power. Class-agnostic, so
    /// it is scored on the union track against the union of the truth
    /// channels.
    Energy,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Oracle => "oracle",
            Baseline::AllZero => "all-zero",
            Baseline::Energy => "energy",
        }
    }
}

/// Mean, population standard deviation, and contributing-example count
/// for one metric in one bin. `n` can be smaller than the bin size when
/// examples were skipped; a bin where every example skipped has `n = 0`
/// and zeroed statistics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct MetricStat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MetricStat {
    fn from_scores(scores: impl Iterator<Item = f64>) -> Self {
        let values: Vec<f64> = scores.collect();
        let n = values.len();
        if n == 0 {
            return MetricStat {
                mean: 0.0,
                std: 0.0,
                n: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        MetricStat {
            mean,
            std: var.sqrt(),
            n,
        }
    }
}

/// One SNR bin's aggregated metrics.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricsRow {
    pub snr_db: f64,
    pub examples: usize,
    pub f1: MetricStat,
    pub dice: MetricStat,
    pub iou: MetricStat,
}

impl MetricsRow {
    pub fn stat(&self, metric: Metric) -> MetricStat {
        match metric {
            Metric::F1 => self.f1,
            Metric::Dice => self.dice,
            Metric::Iou => self.iou,
        }
    }
}

/// Per-example scores before binning. `None` means the metric skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleScores {
    pub index: u32,
    pub snr_db: f32,
    pub f1: Option<f64>,
    pub dice: Option<f64>,
    pub iou: Option<f64>,
}

/// Full evaluation result for one predictor on one split, rows in
/// ascending SNR order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub stages: usize,
    pub split: String,
    pub examples: usize,
    pub threshold: f64,
    pub window: usize,
    pub rows: Vec<MetricsRow>,
}

impl EvalReport {
    /// Exact-bin lookup; SNR values live on a half-dB grid so equality
    /// is well defined.
    pub fn row_for(&self, snr_db: f64) -> Option<&MetricsRow> {
        let key = bin_key(snr_db as f32);
        self.rows.iter().find(|r| bin_key(r.snr_db as f32) == key)
    }

    /// Rows for the requested summary bins, failing on any absent bin.
    pub fn summary(&self, bins: &[f64]) -> Result<Vec<&MetricsRow>, EvalError> {
        bins.iter()
            .map(|&snr| {
                self.row_for(snr)
                    .ok_or(EvalError::BinMismatch { snr_db: snr })
            })
            .collect()
    }
}

/// Half-dB grid values map to integers exactly; used as the bin key.
fn bin_key(snr_db: f32) -> i64 {
    (snr_db as f64 * 2.0).round() as i64
}

/// Tile start offsets covering `[0, n)` with fixed-length `w` windows:
/// consecutive aligned tiles plus, when `n` is not a multiple of `w`, a
/// final right-aligned tile.
pub fn tile_starts(n: usize, w: usize) -> Result<Vec<usize>, DataError> {
    if w == 0 || w > n {
        return Err(DataError::WindowTooLong { w, n });
    }
    let mut starts: Vec<usize> = (0..n / w).map(|k| k * w).collect();
    if n % w != 0 {
        starts.push(n - w);
    }
    Ok(starts)
}

/// Runs the model over one example and returns the thresholded mask.
/// Later tiles overwrite earlier ones on the overlap of a right-aligned
/// final tile.
pub fn predict_mask(
    model: &AnyModel,
    normalizer: &Normalizer,
    ex: &SignalExample,
    config: &EvalConfig,
) -> Result<SegMask, DataError> {
    let n = ex.iq.len();
    let channels = crate::CLASS_COUNT;
    let starts = tile_starts(n, config.window)?;
    let w = config.window;
    let mut probs = vec![0f32; channels * n];
    for start in starts {
        let mut x = TensorBCL::zeros(1, 2, w);
        for k in 0..w {
            x.set(0, 0, k, normalizer.apply_i(ex.iq.i[start + k]));
            x.set(0, 1, k, normalizer.apply_q(ex.iq.q[start + k]));
        }
        let logits = model
            .forward_stages_eval(&x)
            .pop()
            .expect("model has at least one stage");
        for c in 0..channels {
            let row = logits.row(0, c);
            for k in 0..w {
                probs[c * n + start + k] = sigmoid_scalar(row[k]);
            }
        }
    }
    let mut mask = SegMask::new(channels, n);
    for c in 0..channels {
        for l in 0..n {
            if probs[c * n + l] as f64 >= config.threshold {
                mask.set(c, l, true);
            }
        }
    }
    Ok(mask)
}

fn score_masks(index: u32, snr_db: f32, pred: &SegMask, gt: &SegMask) -> ExampleScores {
    let f1 = metric_f1(pred, gt);
    let dice_iou = metric_dice_iou(pred, gt);
    ExampleScores {
        index,
        snr_db,
        f1,
        dice: dice_iou.map(|(d, _)| d),
        iou: dice_iou.map(|(_, i)| i),
    }
}

fn mask_from_bools(bools: &[bool]) -> SegMask {
    let mut mask = SegMask::new(1, bools.len());
    for (l, &b) in bools.iter().enumerate() {
        if b {
            mask.set(0, l, true);
        }
    }
    mask
}

fn score_example(
    predictor: &Predictor<'_>,
    ex: &SignalExample,
    config: &EvalConfig,
) -> Result<ExampleScores, EvalError> {
    let scores = match predictor {
        Predictor::Model { model, normalizer } => {
            let pred = predict_mask(model, normalizer, ex, config)?;
            score_masks(ex.index, ex.snr_db, &pred, &ex.mask)
        }
        Predictor::Baseline(Baseline::Oracle) => {
            score_masks(ex.index, ex.snr_db, &ex.mask.clone(), &ex.mask)
        }
        Predictor::Baseline(Baseline::AllZero) => {
            let pred = SegMask::new(ex.mask.channels(), ex.mask.len());
            score_masks(ex.index, ex.snr_db, &pred, &ex.mask)
        }
        Predictor::Baseline(Baseline::Energy) => {
            let pred = mask_from_bools(&energy_detector(&ex.iq));
            let gt = mask_from_bools(&ex.mask.union_bools());
            score_masks(ex.index, ex.snr_db, &pred, &gt)
        }
    };
    Ok(scores)
}

enum Predictor<'a> {
    Model {
        model: &'a AnyModel,
        normalizer: &'a Normalizer,
    },
    Baseline(Baseline),
}

fn aggregate(
    name: String,
    stages: usize,
    split: String,
    config: &EvalConfig,
    scores: Vec<ExampleScores>,
) -> EvalReport {
    let mut bins: BTreeMap<i64, Vec<&ExampleScores>> = BTreeMap::new();
    for s in &scores {
        bins.entry(bin_key(s.snr_db)).or_default().push(s);
    }
    let rows = bins
        .into_iter()
        .map(|(key, members)| MetricsRow {
            snr_db: key as f64 / 2.0,
            examples: members.len(),
            f1: MetricStat::from_scores(members.iter().filter_map(|s| s.f1)),
            dice: MetricStat::from_scores(members.iter().filter_map(|s| s.dice)),
            iou: MetricStat::from_scores(members.iter().filter_map(|s| s.iou)),
        })
        .collect();
    EvalReport {
        model: name,
        stages,
        split,
        examples: scores.len(),
        threshold: config.threshold,
        window: config.window,
        rows,
    }
}

fn run_eval(
    name: &str,
    stages: usize,
    predictor: Predictor<'_>,
    dataset: &Dataset,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    config.validate()?;
    // Indexed parallel map keeps results in example order, so the
    // report is identical regardless of thread count.
    let scores: Vec<ExampleScores> = (0..dataset.len())
        .into_par_iter()
        .map(|i| {
            let ex = dataset.read_example(i)?;
            score_example(&predictor, &ex, config)
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(aggregate(
        name.to_string(),
        stages,
        dataset.manifest.split.clone(),
        config,
        scores,
    ))
}

/// Evaluates a trained model on every example of the split. The
/// normalizer must be the one frozen at training time; pass
/// [`EvalError::MissingNormalizer`] upstream when neither the checkpoint
/// nor the dataset provides one.
pub fn evaluate_model(
    name: &str,
    model: &AnyModel,
    normalizer: &Normalizer,
    dataset: &Dataset,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    run_eval(
        name,
        model.n_stages(),
        Predictor::Model { model, normalizer },
        dataset,
        config,
    )
}

/// Evaluates a model-free baseline on every example of the split.
pub fn evaluate_baseline(
    baseline: Baseline,
    dataset: &Dataset,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    run_eval(
        baseline.name(),
        0,
        Predictor::Baseline(baseline),
        dataset,
        config,
    )
}
