//! Embedded phase-code tables.
//!
//! Three coded waveform families are supported:
//!
//! - **Barker codes**, lengths 2, 3, 4, 5, 7, 11, 13: binary sequences whose
//!   aperiodic autocorrelation peaks at the code length with every sidelobe
//!   magnitude at most 1.
//! - **Polyphase Barker codes**, lengths 3 through 13: unit-magnitude
//!   complex-phase sequences generalising the same sidelobe bound. The
//!   phases embedded below were obtained by numerical optimisation of the
//!   inner sidelobes (the outermost lag of any unit-magnitude sequence has
//!   magnitude exactly 1); each entry is verified by brute force in the test
//!   suite. Length 6 uses a 60-degree-grid sequence whose sidelobe
//!   magnitudes are exactly 0 or 1, since no margin below 1 exists there.
//! - **Frank codes**, M in {2, 3, 4} (lengths 4, 9, 16): chip (i, j) carries
//!   phase 2*pi*i*j/M, rows concatenated in order.

use super::{SynthError, WaveformClass};
use std::f64::consts::PI;

/// Barker sign sequences, indexed by length.
pub const BARKER_CODES: &[(usize, &[i8])] = &[
    (2, &[1, -1]),
    (3, &[1, 1, -1]),
    (4, &[1, 1, -1, 1]),
    (5, &[1, 1, 1, -1, 1]),
    (7, &[1, 1, 1, -1, -1, 1, -1]),
    (11, &[1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1]),
    (13, &[1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1]),
];

/// Polyphase Barker chip phases in degrees, lengths 3..=13 in order.
///
/// Inner peak sidelobe magnitudes (the outermost lag is always exactly 1):
/// 0.0002, 0.500, 0.772, 1.000, 0.523, 0.663, 0.112, 0.830, 0.706, 0.902,
/// 0.822.
pub const POLYPHASE_BARKER_DEG: &[&[f64]] = &[
    &[0.00, 117.11, 54.21],
    &[0.00, 317.37, 170.25, 278.66],
    &[0.00, 118.71, 309.88, 220.97, 204.53],
    &[0.00, 180.00, 60.00, 0.00, 0.00, 60.00],
    &[0.00, 258.96, 51.51, 323.90, 359.18, 154.29, 203.00],
    &[0.00, 208.83, 129.85, 294.14, 48.91, 114.17, 62.69, 83.40],
    &[0.00, 240.07, 66.76, 318.70, 330.07, 265.25, 319.87, 79.74, 146.22],
    &[
        0.00, 12.48, 90.59, 172.60, 200.92, 89.07, 101.40, 336.50, 146.17, 19.38,
    ],
    &[
        0.00, 262.70, 178.78, 81.74, 213.85, 68.57, 161.01, 28.80, 84.96, 137.82, 198.51,
    ],
    &[
        0.00, 349.49, 25.44, 81.36, 17.24, 342.24, 193.26, 240.67, 40.41, 172.38, 61.90, 283.54,
    ],
    &[
        0.00, 299.89, 218.02, 238.84, 179.06, 29.92, 201.20, 148.15, 234.05, 321.69, 203.75,
        301.08, 12.96,
    ],
];

/// Lengths available for Barker codes.
pub const BARKER_LENGTHS: &[usize] = &[2, 3, 4, 5, 7, 11, 13];
/// Lengths available for polyphase Barker codes.
pub const POLYPHASE_LENGTHS: &[usize] = &[3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13];
/// Frank code orders M (code length is M squared).
pub const FRANK_ORDERS: &[usize] = &[2, 3, 4];

/// Returns the chip phases (radians) for a coded waveform class.
///
/// For Barker and polyphase Barker, `length_or_order` is the code length;
/// for Frank it is the order M (the code has M*M chips).
pub fn code_sequence(class: WaveformClass, length_or_order: usize) -> Result<Vec<f64>, SynthError> {
    match class {
        WaveformClass::Barker => BARKER_CODES
            .iter()
            .find(|(len, _)| *len == length_or_order)
            .map(|(_, signs)| {
                signs
                    .iter()
                    .map(|&s| if s > 0 { 0.0 } else { PI })
                    .collect()
            })
            .ok_or(SynthError::NoSuchCode {
                class,
                length: length_or_order,
            }),
        WaveformClass::PolyphaseBarker => {
            if !(3..=13).contains(&length_or_order) {
                return Err(SynthError::NoSuchCode {
                    class,
                    length: length_or_order,
                });
            }
            Ok(POLYPHASE_BARKER_DEG[length_or_order - 3]
                .iter()
                .map(|d| d.to_radians())
                .collect())
        }
        WaveformClass::Frank => {
            if !FRANK_ORDERS.contains(&length_or_order) {
                return Err(SynthError::NoSuchCode {
                    class,
                    length: length_or_order,
                });
            }
            let m = length_or_order;
            let mut phases = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    phases.push(2.0 * PI * (i * j) as f64 / m as f64);
                }
            }
            Ok(phases)
        }
        WaveformClass::Cpt | WaveformClass::Lfm => Err(SynthError::NoSuchCode {
            class,
            length: length_or_order,
        }),
    }
}
