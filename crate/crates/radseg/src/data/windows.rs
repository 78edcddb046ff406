//! Random training windows and the per-epoch batch stream.
//!
//! Training never sees whole signals: each epoch visits every example in a
//! shuffled order and draws a fixed number of random windows from it. The
//! IQ planes are standardised with the split normaliser at extraction time;
//! masks come out as dense 0/1 floats ready to be loss targets.

use super::{DataError, Normalizer};
use crate::synth::SignalExample;
use crate::CLASS_COUNT;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One training window: standardised IQ (I plane then Q plane, each `w`
/// long) and the matching mask slice as five dense 0/1 planes.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub source_index: u32,
    pub start: usize,
    pub w: usize,
    pub iq: Vec<f32>,
    pub mask: Vec<f32>,
}

/// Extracts the window at an explicit start offset.
pub fn sample_window(
    ex: &SignalExample,
    norm: &Normalizer,
    start: usize,
    w: usize,
) -> WindowSample {
    let n = ex.iq.i.len();
    assert!(w > 0 && start + w <= n, "window [{start}, {}) outside signal of {n}", start + w);
    let mut iq = Vec::with_capacity(2 * w);
    for s in start..start + w {
        iq.push(norm.apply_i(ex.iq.i[s]));
    }
    for s in start..start + w {
        iq.push(norm.apply_q(ex.iq.q[s]));
    }
    let mut mask = vec![0.0f32; CLASS_COUNT * w];
    for c in 0..CLASS_COUNT {
        ex.mask.window_f32(c, start, &mut mask[c * w..(c + 1) * w]);
    }
    WindowSample {
        source_index: ex.index,
        start,
        w,
        iq,
        mask,
    }
}

/// Draws `count` windows with independent uniform starts in `[0, n - w]`.
pub fn draw_windows(
    ex: &SignalExample,
    norm: &Normalizer,
    w: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<WindowSample>, DataError> {
    let n = ex.iq.i.len();
    if w > n {
        return Err(DataError::WindowTooLong { w, n });
    }
    Ok((0..count)
        .map(|_| {
            let start = rng.gen_range(0..=n - w);
            sample_window(ex, norm, start, w)
        })
        .collect())
}

/// One epoch of training batches.
///
/// Examples are visited in a shuffled order drawn from `epoch_seed`; each
/// contributes `windows_per_example` windows, and `batch_size` consecutive
/// examples form a batch (so a batch holds `batch_size *
/// windows_per_example` windows). The final batch keeps whatever examples
/// remain. Identical seeds replay identical window sequences.
pub struct EpochBatches<'a> {
    examples: &'a [SignalExample],
    norm: Normalizer,
    w: usize,
    windows_per_example: usize,
    batch_size: usize,
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

pub fn epoch_batches<'a>(
    examples: &'a [SignalExample],
    norm: &Normalizer,
    w: usize,
    windows_per_example: usize,
    batch_size: usize,
    epoch_seed: u64,
) -> Result<EpochBatches<'a>, DataError> {
    if examples.is_empty() {
        return Err(DataError::EmptySplit);
    }
    let n = examples[0].iq.i.len();
    if w > n {
        return Err(DataError::WindowTooLong { w, n });
    }
    assert!(batch_size > 0 && windows_per_example > 0);
    let mut rng = crate::rng::derive_rng(epoch_seed, &[0x5748_4C45]);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    Ok(EpochBatches {
        examples,
        norm: *norm,
        w,
        windows_per_example,
        batch_size,
        order,
        cursor: 0,
        rng,
    })
}

impl<'a> Iterator for EpochBatches<'a> {
    type Item = Vec<WindowSample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.cursor >= self.order.len() {
            return None;
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let mut batch = Vec::with_capacity((end - self.cursor) * self.windows_per_example);
        for &idx in &self.order[self.cursor..end] {
            let windows = draw_windows(
                &self.examples[idx],
                &self.norm,
                self.w,
                self.windows_per_example,
                &mut self.rng,
            )
            .expect("window length validated at construction");
            batch.extend(windows);
        }
        self.cursor = end;
        Some(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SegMask;
    use crate::synth::IqSignal;

    fn ramp_example(index: u32, n: usize) -> SignalExample {
        let i: Vec<f32> = (0..n).map(|s| s as f32).collect();
        let q: Vec<f32> = (0..n).map(|s| -(s as f32)).collect();
        let mut mask = SegMask::new(CLASS_COUNT, n);
        mask.set_range(2, n / 4, n / 2);
        SignalExample {
            index,
            iq: IqSignal { i, q },
            mask,
            snr_db: 0.0,
            emitters: Vec::new(),
        }
    }

    #[test]
    fn window_content_matches_source() {
        let ex = ramp_example(7, 2048);
        let norm = Normalizer {
            mean_i: 10.0,
            mean_q: 0.0,
            var_i: 4.0,
            var_q: 1.0,
        };
        let wnd = sample_window(&ex, &norm, 500, 64);
        assert_eq!(wnd.source_index, 7);
        assert_eq!(wnd.start, 500);
        assert_eq!(wnd.iq.len(), 2 * 64);
        assert_eq!(wnd.mask.len(), CLASS_COUNT * 64);
        for k in 0..64 {
            let raw_i = (500 + k) as f32;
            assert_eq!(wnd.iq[k], (raw_i - 10.0) / 2.0);
            assert_eq!(wnd.iq[64 + k], -raw_i);
            for c in 0..CLASS_COUNT {
                let expect = if ex.mask.get(c, 500 + k) { 1.0 } else { 0.0 };
                assert_eq!(wnd.mask[c * 64 + k], expect);
            }
        }
        // The mask run [512, 1024) crosses this window from position 12 on.
        assert_eq!(wnd.mask[2 * 64 + 11], 0.0);
        assert_eq!(wnd.mask[2 * 64 + 12], 1.0);
    }

    #[test]
    fn starts_stay_in_bounds() {
        let ex = ramp_example(0, 2048);
        let norm = Normalizer::identity();
        let mut rng = crate::rng::derive_rng(1, &[0]);
        let windows = draw_windows(&ex, &norm, 512, 200, &mut rng).unwrap();
        for wnd in &windows {
            assert!(wnd.start <= 2048 - 512);
        }
        let starts: std::collections::HashSet<_> =
            windows.iter().map(|w| w.start).collect();
        assert!(starts.len() > 20, "starts should spread out, got {}", starts.len());
    }

    #[test]
    fn full_length_window_starts_at_zero() {
        let ex = ramp_example(0, 1024);
        let norm = Normalizer::identity();
        let mut rng = crate::rng::derive_rng(2, &[0]);
        let windows = draw_windows(&ex, &norm, 1024, 5, &mut rng).unwrap();
        assert!(windows.iter().all(|w| w.start == 0));
    }

    #[test]
    fn window_longer_than_signal_is_rejected() {
        let ex = ramp_example(0, 256);
        let norm = Normalizer::identity();
        let mut rng = crate::rng::derive_rng(3, &[0]);
        match draw_windows(&ex, &norm, 512, 1, &mut rng) {
            Err(DataError::WindowTooLong { w: 512, n: 256 }) => {}
            other => panic!("expected WindowTooLong, got {other:?}"),
        }
    }

    #[test]
    fn epoch_covers_every_example_in_batches() {
        let examples: Vec<_> = (0..4).map(|i| ramp_example(i, 512)).collect();
        let norm = Normalizer::identity();
        let batches: Vec<_> =
            epoch_batches(&examples, &norm, 128, 2, 2, 77).unwrap().collect();
        assert_eq!(batches.len(), 2);
        let mut seen = Vec::new();
        for batch in &batches {
            assert_eq!(batch.len(), 4); // 2 examples x 2 windows
            for wnd in batch {
                seen.push(wnd.source_index);
            }
        }
        let mut uniq: Vec<_> = seen.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert_eq!(uniq, vec![0, 1, 2, 3]);
        // Each example contributes exactly windows_per_example windows.
        for idx in 0..4u32 {
            assert_eq!(seen.iter().filter(|&&s| s == idx).count(), 2);
        }
    }

    #[test]
    fn short_final_batch_is_kept() {
        let examples: Vec<_> = (0..5).map(|i| ramp_example(i, 512)).collect();
        let norm = Normalizer::identity();
        let batches: Vec<_> =
            epoch_batches(&examples, &norm, 128, 2, 2, 5).unwrap().collect();
        assert_eq!(batches.len(), 3);
        assert_eq!(batches[2].len(), 2);
    }

    #[test]
    fn same_seed_replays_identically() {
        let examples: Vec<_> = (0..8).map(|i| ramp_example(i, 512)).collect();
        let norm = Normalizer::identity();
        let trace = |seed: u64| -> Vec<(u32, usize)> {
            epoch_batches(&examples, &norm, 128, 2, 3, seed)
                .unwrap()
                .flatten()
                .map(|w| (w.source_index, w.start))
                .collect()
        };
        assert_eq!(trace(42), trace(42));
        assert_ne!(trace(42), trace(43));
    }
}
