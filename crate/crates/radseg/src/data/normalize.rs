//! Population standardisation statistics for a training split.
//!
//! I and Q are treated as separate populations over every sample of every
//! example. Accumulation is f64 sum and sum of squares in example index
//! order, so the statistics are reproducible bit for bit regardless of how
//! rendering was parallelised. Variances are population (divide by n) and
//! floored at 1e-12 so a degenerate split still standardises finitely.

use super::DataError;
use crate::synth::IqSignal;
use serde::{Deserialize, Serialize};

pub const VAR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean_i: f64,
    pub mean_q: f64,
    pub var_i: f64,
    pub var_q: f64,
}

impl Normalizer {
    pub fn std_i(&self) -> f64 {
        self.var_i.sqrt()
    }

    pub fn std_q(&self) -> f64 {
        self.var_q.sqrt()
    }

    /// Identity transform; useful as an explicit "no standardisation".
    pub fn identity() -> Self {
        Normalizer {
            mean_i: 0.0,
            mean_q: 0.0,
            var_i: 1.0,
            var_q: 1.0,
        }
    }

    pub fn apply_i(&self, v: f32) -> f32 {
        ((v as f64 - self.mean_i) / self.std_i()) as f32
    }

    pub fn apply_q(&self, v: f32) -> f32 {
        ((v as f64 - self.mean_q) / self.std_q()) as f32
    }
}

/// Streaming accumulator so shard writing and statistics share one pass.
#[derive(Debug, Clone, Default)]
pub struct NormalizerAccumulator {
    sum_i: f64,
    sum_q: f64,
    sumsq_i: f64,
    sumsq_q: f64,
    count: u64,
}

impl NormalizerAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_signal(&mut self, iq: &IqSignal) {
        for &v in &iq.i {
            let v = v as f64;
            self.sum_i += v;
            self.sumsq_i += v * v;
        }
        for &v in &iq.q {
            let v = v as f64;
            self.sum_q += v;
            self.sumsq_q += v * v;
        }
        self.count += iq.i.len() as u64;
    }

    pub fn finish(&self) -> Result<Normalizer, DataError> {
        if self.count == 0 {
            return Err(DataError::EmptySplit);
        }
        let n = self.count as f64;
        let mean_i = self.sum_i / n;
        let mean_q = self.sum_q / n;
        let var_i = (self.sumsq_i / n - mean_i * mean_i).max(VAR_FLOOR);
        let var_q = (self.sumsq_q / n - mean_q * mean_q).max(VAR_FLOOR);
        Ok(Normalizer {
            mean_i,
            mean_q,
            var_i,
            var_q,
        })
    }
}

/// Population statistics over a set of signals.
pub fn compute_normalizer<'a>(
    signals: impl IntoIterator<Item = &'a IqSignal>,
) -> Result<Normalizer, DataError> {
    let mut acc = NormalizerAccumulator::new();
    for iq in signals {
        acc.add_signal(iq);
    }
    acc.finish()
}
