//! Dense (batch, channels, length) tensors.

use super::Float;
use rand::Rng;

/// Row-major (batch, channels, length) tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBCL<T> {
    b: usize,
    c: usize,
    l: usize,
    data: Vec<T>,
}

impl<T: Float> TensorBCL<T> {
    pub fn zeros(b: usize, c: usize, l: usize) -> Self {
        assert!(l > 0, "tensor length must be positive");
        TensorBCL {
            b,
            c,
            l,
            data: vec![T::ZERO; b * c * l],
        }
    }

    /// Wraps `data` laid out batch-major, then channel, then position.
    pub fn from_vec(b: usize, c: usize, l: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), b * c * l, "tensor data length mismatch");
        assert!(l > 0, "tensor length must be positive");
        TensorBCL { b, c, l, data }
    }

    /// Uniform values in [lo, hi), for tests and gradient checks.
    pub fn random(b: usize, c: usize, l: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Self {
        let data = (0..b * c * l)
            .map(|_| T::from_f64(rng.gen_range(lo..hi)))
            .collect();
        TensorBCL { b, c, l, data }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.b, self.c, self.l)
    }

    pub fn batch(&self) -> usize {
        self.b
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn length(&self) -> usize {
        self.l
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn idx(&self, b: usize, c: usize, l: usize) -> usize {
        debug_assert!(b < self.b && c < self.c && l < self.l);
        (b * self.c + c) * self.l + l
    }

    #[inline]
    pub fn get(&self, b: usize, c: usize, l: usize) -> T {
        self.data[self.idx(b, c, l)]
    }

    #[inline]
    pub fn set(&mut self, b: usize, c: usize, l: usize, v: T) {
        let i = self.idx(b, c, l);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// The contiguous length-`l` row for one (batch, channel) pair.
    #[inline]
    pub fn row(&self, b: usize, c: usize) -> &[T] {
        let start = (b * self.c + c) * self.l;
        &self.data[start..start + self.l]
    }

    #[inline]
    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [T] {
        let start = (b * self.c + c) * self.l;
        &mut self.data[start..start + self.l]
    }

    /// Elementwise dot product accumulated in f64.
    pub fn dot_f64(&self, other: &TensorBCL<T>) -> f64 {
        assert_eq!(self.shape(), other.shape(), "dot shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a.to_f64() * b.to_f64())
            .sum()
    }

    /// Converts every element, preserving shape.
    pub fn cast<U: Float>(&self) -> TensorBCL<U> {
        TensorBCL {
            b: self.b,
            c: self.c,
            l: self.l,
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }
}
