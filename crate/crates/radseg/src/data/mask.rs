//! Bit-packed segmentation masks.
//!
//! A mask is `channels` binary sequences of length `n`, stored channel-major
//! with each channel packed least-significant-bit first into `ceil(n/8)`
//! bytes. Trailing pad bits of the last byte in a channel are always zero.
//! This layout is the shard wire format, so a mask can be written and read
//! back without repacking.

/// Packs a bit sequence LSB-first, 8 bits per byte.
pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    bytes
}

/// Unpacks `n` bits from an LSB-first packed byte sequence.
///
/// Panics when `bytes` is shorter than `ceil(n/8)`.
pub fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    assert!(bytes.len() >= n.div_ceil(8), "packed buffer too short");
    (0..n).map(|i| bytes[i / 8] & (1 << (i % 8)) != 0).collect()
}

/// A multi-channel binary mask over `n` samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMask {
    channels: usize,
    n: usize,
    bytes: Vec<u8>,
}

impl SegMask {
    /// All-zero mask.
    pub fn new(channels: usize, n: usize) -> Self {
        SegMask {
            channels,
            n,
            bytes: vec![0u8; channels * n.div_ceil(8)],
        }
    }

    /// Wraps packed bytes produced by [`SegMask::as_bytes`] or read from a
    /// shard. Panics when the byte count does not match `channels * ceil(n/8)`.
    pub fn from_bytes(channels: usize, n: usize, bytes: Vec<u8>) -> Self {
        assert_eq!(
            bytes.len(),
            channels * n.div_ceil(8),
            "packed mask byte count mismatch"
        );
        SegMask { channels, n, bytes }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn bytes_per_channel(&self) -> usize {
        self.n.div_ceil(8)
    }

    /// The packed channel-major byte layout (the shard wire format).
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, channel: usize, i: usize) -> bool {
        debug_assert!(channel < self.channels && i < self.n);
        let base = channel * self.bytes_per_channel();
        self.bytes[base + i / 8] & (1 << (i % 8)) != 0
    }

    pub fn set(&mut self, channel: usize, i: usize, value: bool) {
        debug_assert!(channel < self.channels && i < self.n);
        let base = channel * self.bytes_per_channel();
        let byte = &mut self.bytes[base + i / 8];
        if value {
            *byte |= 1 << (i % 8);
        } else {
            *byte &= !(1 << (i % 8));
        }
    }

    /// Sets `[start, end)` of one channel to 1.
    pub fn set_range(&mut self, channel: usize, start: usize, end: usize) {
        debug_assert!(end <= self.n);
        for i in start..end {
            self.set(channel, i, true);
        }
    }

    pub fn count_ones(&self, channel: usize) -> usize {
        let bpc = self.bytes_per_channel();
        self.bytes[channel * bpc..(channel + 1) * bpc]
            .iter()
            .map(|b| b.count_ones() as usize)
            .sum()
    }

    pub fn total_ones(&self) -> usize {
        (0..self.channels).map(|c| self.count_ones(c)).sum()
    }

    /// True when the channel has at least one active sample.
    pub fn channel_active(&self, channel: usize) -> bool {
        self.count_ones(channel) > 0
    }

    /// Sample-wise OR across channels.
    pub fn union_bools(&self) -> Vec<bool> {
        let mut union = vec![false; self.n];
        for c in 0..self.channels {
            for (i, u) in union.iter_mut().enumerate() {
                *u |= self.get(c, i);
            }
        }
        union
    }

    /// Copies `[start, start+out.len())` of one channel into `out` as 0/1.
    pub fn window_f32(&self, channel: usize, start: usize, out: &mut [f32]) {
        debug_assert!(start + out.len() <= self.n);
        for (off, o) in out.iter_mut().enumerate() {
            *o = if self.get(channel, start + off) { 1.0 } else { 0.0 };
        }
    }
}
