//! Single-pulse complex baseband waveforms.

use super::codes::code_sequence;
use super::{EmitterTruth, SynthError, WaveformClass};
use std::f64::consts::TAU;

/// Renders one pulse as `pw_samples` unit-magnitude complex samples (I, Q).
///
/// CPT holds the initial phase for the whole pulse. Coded classes expand
/// their chip phases into contiguous runs with boundaries at
/// `round(k * pw_samples / L)`, which distributes rounding so the runs tile
/// the pulse exactly. LFM sweeps a quadratic phase whose instantaneous
/// frequency runs -B/2 to +B/2 over the pulse (reversed when `lfm_up` is
/// false), on top of the initial phase.
pub fn synth_pulse_iq(
    emitter: &EmitterTruth,
    pw_samples: usize,
    sample_rate_hz: f64,
) -> Result<Vec<(f64, f64)>, SynthError> {
    let phi0 = emitter.initial_phase_rad;
    match emitter.class {
        WaveformClass::Cpt => Ok(vec![(phi0.cos(), phi0.sin()); pw_samples]),
        WaveformClass::Barker | WaveformClass::PolyphaseBarker | WaveformClass::Frank => {
            let chips = emitter.code_length.unwrap_or(0);
            // code_sequence takes the Frank order M; code_length stores chips M^2.
            let lookup = if emitter.class == WaveformClass::Frank {
                (chips as f64).sqrt().round() as usize
            } else {
                chips
            };
            let phases = code_sequence(emitter.class, lookup)?;
            let l = phases.len();
            if pw_samples < l {
                return Err(SynthError::ChipUnderflow {
                    pw_samples,
                    code_length: l,
                });
            }
            let mut out = Vec::with_capacity(pw_samples);
            for (k, &chip) in phases.iter().enumerate() {
                let start = (k as f64 * pw_samples as f64 / l as f64).round() as usize;
                let end = ((k + 1) as f64 * pw_samples as f64 / l as f64).round() as usize;
                let phase = phi0 + chip;
                let s = (phase.cos(), phase.sin());
                out.extend(std::iter::repeat(s).take(end - start));
            }
            debug_assert_eq!(out.len(), pw_samples);
            Ok(out)
        }
        WaveformClass::Lfm => {
            let b = emitter.lfm_bandwidth_hz.unwrap_or(0.0);
            let up = emitter.lfm_up.unwrap_or(true);
            let tau = pw_samples as f64 / sample_rate_hz;
            let mut out = Vec::with_capacity(pw_samples);
            for n in 0..pw_samples {
                let t = n as f64 / sample_rate_hz;
                // Instantaneous frequency -B/2 + B*t/tau integrates to this.
                let sweep = TAU * (-0.5 * b * t + b * t * t / (2.0 * tau));
                let phase = if up { phi0 + sweep } else { phi0 - sweep };
                out.push((phase.cos(), phase.sin()));
            }
            Ok(out)
        }
    }
}
