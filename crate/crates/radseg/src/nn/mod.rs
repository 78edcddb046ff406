//! Minimal from-scratch differentiable layer set.
//!
//! Exactly the operators the segmentation models need: 1D convolution
//! (kernel 1 or 3, optional dilation), 1x2 stride-2 transposed convolution,
//! 1x2 max pooling, batch normalisation, ReLU/sigmoid, channel
//! concatenation, three losses, and Adam. Everything is generic over
//! [`Float`] so training runs in f32 while the finite-difference gradient
//! oracle in [`gradcheck`] runs the same code in f64.
//!
//! Shape violations are programming errors and panic; there are no
//! recoverable error paths inside the numeric kernels.
//!
//! Layers mutate internal caches on `forward_train` and read them in
//! `backward`; `forward_eval` is pure (`&self`) and touches no state, which
//! is what makes concurrent evaluation of one model instance safe.

pub mod adam;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod tensor;

pub use tensor::TensorBCL;

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Scalar type for tensors: f32 for training, f64 for gradient checks.
pub trait Float:
    Copy
    + PartialOrd
    + Send
    + Sync
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn maxv(self, other: Self) -> Self;
    fn is_finite(self) -> bool;
}

macro_rules! impl_float {
    ($t:ty) => {
        impl Float for $t {
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
            fn exp(self) -> Self {
                self.exp()
            }
            fn ln(self) -> Self {
                self.ln()
            }
            fn sqrt(self) -> Self {
                self.sqrt()
            }
            fn abs(self) -> Self {
                self.abs()
            }
            fn maxv(self, other: Self) -> Self {
                self.max(other)
            }
            fn is_finite(self) -> bool {
                self.is_finite()
            }
        }
    };
}

impl_float!(f32);
impl_float!(f64);

/// Whether a tensor visited by [`Layer::visit`] is updated by the optimiser
/// or carried along as state (batch-norm running statistics).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Learnable,
    Buffer,
}

/// Mutable view of one named parameter tensor.
///
/// Visit order is the canonical parameter order: the optimiser keys its
/// moments by it and checkpoints serialise in it.
pub struct ParamView<'a, T> {
    pub name: String,
    pub kind: ParamKind,
    pub shape: Vec<usize>,
    pub values: &'a mut [T],
    /// Present exactly for learnable parameters.
    pub grads: Option<&'a mut [T]>,
}

/// A differentiable single-input single-output block.
pub trait Layer<T: Float> {
    /// Forward pass that caches what `backward` needs and updates any
    /// training-time state (batch-norm running statistics).
    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T>;

    /// Pure forward pass using stored state; mutates nothing.
    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T>;

    /// Consumes the cached activations from the last `forward_train`,
    /// accumulates parameter gradients, and returns the input gradient.
    fn backward(&mut self, grad_out: &TensorBCL<T>) -> TensorBCL<T>;

    fn zero_grad(&mut self);

    /// Visits every parameter tensor in canonical order, names prefixed
    /// with `prefix`.
    fn visit<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(ParamView<'a, T>));
}

/// Total learnable scalar count of a layer or model.
pub fn learnable_count<T: Float>(layer: &mut dyn Layer<T>) -> usize {
    let mut n = 0;
    layer.visit("", &mut |v| {
        if v.kind == ParamKind::Learnable {
            n += v.values.len();
        }
    });
    n
}
