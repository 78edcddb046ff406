//! Deterministic random stream derivation.
//!
//! Every random decision in the crate flows from a named substream of a
//! 64-bit master seed. Substreams are derived by hashing the seed together
//! with a list of tag words, so independent consumers (per-example
//! generation, per-epoch shuffling, per-stage parameter init) never share
//! state and never depend on call order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 step; the standard 64-bit finaliser used for seed spreading.
pub fn splitmix64(state: &mut u64) {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    *state = z ^ (z >> 31);
}

/// Derives a ChaCha8 stream from `seed` and a list of tag words.
///
/// The 256-bit ChaCha key is filled from a splitmix64 chain over the seed
/// and tags, so any change to either yields an unrelated stream.
pub fn derive_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0xA076_1D64_78BD_642F;
    splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(0xE703_7ED1_A0B4_28DB);
        splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    let mut s = state;
    for chunk in key.chunks_exact_mut(8) {
        splitmix64(&mut s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Stable 64-bit FNV-1a hash of a byte string, for tagging streams by name.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
