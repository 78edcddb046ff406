//! Layer implementations with manual backward passes.
//!
//! Convolutions use the cross-correlation convention (no kernel flip).
//! Kernels initialise uniform in +-sqrt(6/(fan_in+fan_out)) with
//! fan = channels*kernel, biases zero, batch-norm gamma 1 and beta 0.

use super::tensor::TensorBCL;
use super::{Float, Layer, ParamKind, ParamView};
use rand::Rng;

fn xavier<T: Float>(n: usize, fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Vec<T> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n)
        .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
        .collect()
}

/// Stable logistic function; saturates to 0/1 without overflow.
pub fn sigmoid_scalar<T: Float>(x: T) -> T {
    if x >= T::ZERO {
        T::ONE / (T::ONE + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::ONE + e)
    }
}

/// 1D convolution, kernel 1 or 3, stride 1.
///
/// Kernel-3 convolutions pad by the dilation so length is preserved;
/// kernel-1 convolutions are pointwise.
pub struct Conv1d<T> {
    in_c: usize,
    out_c: usize,
    k: usize,
    dilation: usize,
    pad: usize,
    weight: Vec<T>,
    bias: Vec<T>,
    wgrad: Vec<T>,
    bgrad: Vec<T>,
    cache_x: Option<TensorBCL<T>>,
}

impl<T: Float> Conv1d<T> {
    pub fn new(in_c: usize, out_c: usize, k: usize, dilation: usize, rng: &mut impl Rng) -> Self {
        assert!(k == 1 || k == 3, "kernel must be 1 or 3");
        assert!(dilation >= 1);
        let pad = if k == 3 { dilation } else { 0 };
        Conv1d {
            in_c,
            out_c,
            k,
            dilation,
            pad,
            weight: xavier(out_c * in_c * k, in_c * k, out_c * k, rng),
            bias: vec![T::ZERO; out_c],
            wgrad: vec![T::ZERO; out_c * in_c * k],
            bgrad: vec![T::ZERO; out_c],
            cache_x: None,
        }
    }

    pub fn set_weights(&mut self, weight: &[T], bias: &[T]) {
        assert_eq!(weight.len(), self.weight.len());
        assert_eq!(bias.len(), self.bias.len());
        self.weight.copy_from_slice(weight);
        self.bias.copy_from_slice(bias);
    }

    fn forward(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let (bsz, in_c, len) = x.shape();
        assert_eq!(in_c, self.in_c, "conv1d input channel mismatch");
        let mut y = TensorBCL::zeros(bsz, self.out_c, len);
        for b in 0..bsz {
            for oc in 0..self.out_c {
                let row = y.row_mut(b, oc);
                let bias = self.bias[oc];
                for v in row.iter_mut() {
                    *v = bias;
                }
                for ic in 0..self.in_c {
                    let xr = x.row(b, ic);
                    for kk in 0..self.k {
                        let w = self.weight[(oc * self.in_c + ic) * self.k + kk];
                        let off = (kk * self.dilation) as isize - self.pad as isize;
                        let l0 = (-off).max(0) as usize;
                        let l1 = (len as isize).min(len as isize - off).max(0) as usize;
                        if l0 >= l1 {
                            continue;
                        }
                        let xs = &xr[(l0 as isize + off) as usize..][..l1 - l0];
                        for (yy, &xx) in row[l0..l1].iter_mut().zip(xs) {
                            *yy += w * xx;
                        }
                    }
                }
            }
        }
        y
    }
}

impl<T: Float> Layer<T> for Conv1d<T> {
    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let y = self.forward(x);
        self.cache_x = Some(x.clone());
        y
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        self.forward(x)
    }

    fn backward(&mut self, grad_out: &TensorBCL<T>) -> TensorBCL<T> {
        let x = self.cache_x.take().expect("backward before forward_train");
        let (bsz, _, len) = x.shape();
        assert_eq!(grad_out.shape(), (bsz, self.out_c, len));

        for oc in 0..self.out_c {
            let mut db = T::ZERO;
            for b in 0..bsz {
                for &g in grad_out.row(b, oc) {
                    db += g;
                }
            }
            self.bgrad[oc] += db;
        }
        for oc in 0..self.out_c {
            for ic in 0..self.in_c {
                for kk in 0..self.k {
                    let off = (kk * self.dilation) as isize - self.pad as isize;
                    let l0 = (-off).max(0) as usize;
                    let l1 = (len as isize).min(len as isize - off).max(0) as usize;
                    if l0 >= l1 {
                        continue;
                    }
                    let mut s = T::ZERO;
                    for b in 0..bsz {
                        let dy = &grad_out.row(b, oc)[l0..l1];
                        let xs = &x.row(b, ic)[(l0 as isize + off) as usize..][..l1 - l0];
                        for (&g, &xx) in dy.iter().zip(xs) {
                            s += g * xx;
                        }
                    }
                    self.wgrad[(oc * self.in_c + ic) * self.k + kk] += s;
                }
            }
        }

        // dx[l] = sum_{oc,kk} w * dy[l - kk*d + pad]
        let mut dx = TensorBCL::zeros(bsz, self.in_c, len);
        for b in 0..bsz {
            for ic in 0..self.in_c {
                let dxr = dx.row_mut(b, ic);
                for oc in 0..self.out_c {
                    let dyr = grad_out.row(b, oc);
                    for kk in 0..self.k {
                        let w = self.weight[(oc * self.in_c + ic) * self.k + kk];
                        let off = self.pad as isize - (kk * self.dilation) as isize;
                        let l0 = (-off).max(0) as usize;
                        let l1 = (len as isize).min(len as isize - off).max(0) as usize;
                        if l0 >= l1 {
                            continue;
                        }
                        let gs = &dyr[(l0 as isize + off) as usize..][..l1 - l0];
                        for (dd, &g) in dxr[l0..l1].iter_mut().zip(gs) {
                            *dd += w * g;
                        }
                    }
                }
            }
        }
        dx
    }

    fn zero_grad(&mut self) {
        self.wgrad.iter_mut().for_each(|g| *g = T::ZERO);
        self.bgrad.iter_mut().for_each(|g| *g = T::ZERO);
    }

    fn visit<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(ParamView<'a, T>)) {
        f(ParamView {
            name: format!("{prefix}weight"),
            kind: ParamKind::Learnable,
            shape: vec![self.out_c, self.in_c, self.k],
            values: &mut self.weight,
            grads: Some(&mut self.wgrad),
        });
        f(ParamView {
            name: format!("{prefix}bias"),
            kind: ParamKind::Learnable,
            shape: vec![self.out_c],
            values: &mut self.bias,
            grads: Some(&mut self.bgrad),
        });
    }
}

/// Transposed 1D convolution, kernel 2, stride 2: doubles the length.
pub struct TConv1d<T> {
    in_c: usize,
    out_c: usize,
    weight: Vec<T>,
    bias: Vec<T>,
    wgrad: Vec<T>,
    bgrad: Vec<T>,
    cache_x: Option<TensorBCL<T>>,
}

impl<T: Float> TConv1d<T> {
    pub fn new(in_c: usize, out_c: usize, rng: &mut impl Rng) -> Self {
        TConv1d {
            in_c,
            out_c,
            weight: xavier(in_c * out_c * 2, in_c * 2, out_c * 2, rng),
            bias: vec![T::ZERO; out_c],
            wgrad: vec![T::ZERO; in_c * out_c * 2],
            bgrad: vec![T::ZERO; out_c],
            cache_x: None,
        }
    }

    pub fn set_weights(&mut self, weight: &[T], bias: &[T]) {
        assert_eq!(weight.len(), self.weight.len());
        assert_eq!(bias.len(), self.bias.len());
        self.weight.copy_from_slice(weight);
        self.bias.copy_from_slice(bias);
    }

    fn forward(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let (bsz, in_c, len) = x.shape();
        assert_eq!(in_c, self.in_c, "tconv1d input channel mismatch");
        let mut y = TensorBCL::zeros(bsz, self.out_c, 2 * len);
        for b in 0..bsz {
            for oc in 0..self.out_c {
                let row = y.row_mut(b, oc);
                let bias = self.bias[oc];
                for v in row.iter_mut() {
                    *v = bias;
                }
                for ic in 0..self.in_c {
                    let xr = x.row(b, ic);
                    let w0 = self.weight[(ic * self.out_c + oc) * 2];
                    let w1 = self.weight[(ic * self.out_c + oc) * 2 + 1];
                    for (l, &xx) in xr.iter().enumerate() {
                        row[2 * l] += w0 * xx;
                        row[2 * l + 1] += w1 * xx;
                    }
                }
            }
        }
        y
    }
}

impl<T: Float> Layer<T> for TConv1d<T> {
    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let y = self.forward(x);
        self.cache_x = Some(x.clone());
        y
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        self.forward(x)
    }

    fn backward(&mut self, grad_out: &TensorBCL<T>) -> TensorBCL<T> {
        let x = self.cache_x.take().expect("backward before forward_train");
        let (bsz, _, len) = x.shape();
        assert_eq!(grad_out.shape(), (bsz, self.out_c, 2 * len));

        for oc in 0..self.out_c {
            let mut db = T::ZERO;
            for b in 0..bsz {
                for &g in grad_out.row(b, oc) {
                    db += g;
                }
            }
            self.bgrad[oc] += db;
        }
        let mut dx = TensorBCL::zeros(bsz, self.in_c, len);
        for b in 0..bsz {
            for ic in 0..self.in_c {
                let dxr = dx.row_mut(b, ic);
                let xr = x.row(b, ic);
                for oc in 0..self.out_c {
                    let dyr = grad_out.row(b, oc);
                    let wi = (ic * self.out_c + oc) * 2;
                    let (w0, w1) = (self.weight[wi], self.weight[wi + 1]);
                    let mut dw0 = T::ZERO;
                    let mut dw1 = T::ZERO;
                    for l in 0..len {
                        let g0 = dyr[2 * l];
                        let g1 = dyr[2 * l + 1];
                        dxr[l] += w0 * g0 + w1 * g1;
                        dw0 += xr[l] * g0;
                        dw1 += xr[l] * g1;
                    }
                    self.wgrad[wi] += dw0;
                    self.wgrad[wi + 1] += dw1;
                }
            }
        }
        dx
    }

    fn zero_grad(&mut self) {
        self.wgrad.iter_mut().for_each(|g| *g = T::ZERO);
        self.bgrad.iter_mut().for_each(|g| *g = T::ZERO);
    }

    fn visit<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(ParamView<'a, T>)) {
        f(ParamView {
            name: format!("{prefix}weight"),
            kind: ParamKind::Learnable,
            shape: vec![self.in_c, self.out_c, 2],
            values: &mut self.weight,
            grads: Some(&mut self.wgrad),
        });
        f(ParamView {
            name: format!("{prefix}bias"),
            kind: ParamKind::Learnable,
            shape: vec![self.out_c],
            values: &mut self.bias,
            grads: Some(&mut self.bgrad),
        });
    }
}

/// 1x2 stride-2 max pooling. Ties route the gradient to the lower index.
pub struct MaxPool1d<T> {
    // (input shape, per-output flag: 1 when the right element won)
    cache: Option<((usize, usize, usize), Vec<u8>)>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Float> MaxPool1d<T> {
    pub fn new() -> Self {
        MaxPool1d {
            cache: None,
            _marker: std::marker::PhantomData,
        }
    }

    fn forward(&self, x: &TensorBCL<T>) -> (TensorBCL<T>, Vec<u8>) {
        let (bsz, c, len) = x.shape();
        assert!(len % 2 == 0, "maxpool needs even length, got {len}");
        let mut y = TensorBCL::zeros(bsz, c, len / 2);
        let mut arg = vec![0u8; bsz * c * len / 2];
        let mut pos = 0;
        for b in 0..bsz {
            for ch in 0..c {
                let xr = x.row(b, ch);
                let yr = y.row_mut(b, ch);
                for i in 0..len / 2 {
                    let (a, r) = (xr[2 * i], xr[2 * i + 1]);
                    if r > a {
                        yr[i] = r;
                        arg[pos] = 1;
                    } else {
                        yr[i] = a;
                    }
                    pos += 1;
                }
            }
        }
        (y, arg)
    }
}

impl<T: Float> Default for MaxPool1d<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Float> Layer<T> for MaxPool1d<T> {
    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let (y, arg) = self.forward(x);
        self.cache = Some((x.shape(), arg));
        y
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        self.forward(x).0
    }

    fn backward(&mut self, grad_out: &TensorBCL<T>) -> TensorBCL<T> {
        let ((bsz, c, len), arg) = self.cache.take().expect("backward before forward_train");
        assert_eq!(grad_out.shape(), (bsz, c, len / 2));
        let mut dx = TensorBCL::zeros(bsz, c, len);
        let mut pos = 0;
        for b in 0..bsz {
            for ch in 0..c {
                let dyr = grad_out.row(b, ch);
                let dxr = dx.row_mut(b, ch);
                for (i, &g) in dyr.iter().enumerate() {
                    dxr[2 * i + arg[pos] as usize] = g;
                    pos += 1;
                }
            }
        }
        dx
    }

    fn zero_grad(&mut self) {}

    fn visit<'a>(&'a mut self, _prefix: &str, _f: &mut dyn FnMut(ParamView<'a, T>)) {}
}

struct BnCache<T> {
    x_hat: TensorBCL<T>,
    inv_std: Vec<f64>,
}

/// Per-channel batch normalisation over (batch, length).
///
/// Statistics are population (biased) both for the batch and the running
/// estimates; accumulation runs in f64 regardless of T. Running stats
/// update as 0.9*running + 0.1*batch (momentum 0.1), eps 1e-5.
pub struct BatchNorm1d<T> {
    c: usize,
    eps: f64,
    momentum: f64,
    gamma: Vec<T>,
    beta: Vec<T>,
    ggrad: Vec<T>,
    bgrad: Vec<T>,
    running_mean: Vec<T>,
    running_var: Vec<T>,
    cache: Option<BnCache<T>>,
}

impl<T: Float> BatchNorm1d<T> {
    pub fn new(c: usize) -> Self {
        BatchNorm1d {
            c,
            eps: 1e-5,
            momentum: 0.1,
            gamma: vec![T::ONE; c],
            beta: vec![T::ZERO; c],
            ggrad: vec![T::ZERO; c],
            bgrad: vec![T::ZERO; c],
            running_mean: vec![T::ZERO; c],
            running_var: vec![T::ONE; c],
            cache: None,
        }
    }

    pub fn running_stats(&self) -> (&[T], &[T]) {
        (&self.running_mean, &self.running_var)
    }
}

impl<T: Float> Layer<T> for BatchNorm1d<T> {
    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let (bsz, c, len) = x.shape();
        assert_eq!(c, self.c, "batchnorm channel mismatch");
        let n = bsz * len;
        assert!(n >= 2, "batch norm needs at least two values per channel");

        let mut y = TensorBCL::zeros(bsz, c, len);
        let mut x_hat = TensorBCL::zeros(bsz, c, len);
        let mut inv_std = vec![0.0f64; c];
        for ch in 0..c {
            let mut sum = 0.0f64;
            for b in 0..bsz {
                for &v in x.row(b, ch) {
                    sum += v.to_f64();
                }
            }
            let mean = sum / n as f64;
            let mut ssq = 0.0f64;
            for b in 0..bsz {
                for &v in x.row(b, ch) {
                    let d = v.to_f64() - mean;
                    ssq += d * d;
                }
            }
            let var = ssq / n as f64;
            let istd = 1.0 / (var + self.eps).sqrt();
            inv_std[ch] = istd;
            let (g, bt) = (self.gamma[ch], self.beta[ch]);
            for b in 0..bsz {
                let xr = x.row(b, ch);
                let hr = x_hat.row_mut(b, ch);
                for (h, &v) in hr.iter_mut().zip(xr) {
                    *h = T::from_f64((v.to_f64() - mean) * istd);
                }
            }
            for b in 0..bsz {
                // Borrow dance: x_hat row is read, y row written.
                let start = (b * c + ch) * len;
                for l in 0..len {
                    let h = x_hat.data()[start + l];
                    y.data_mut()[start + l] = g * h + bt;
                }
            }
            let m = self.momentum;
            self.running_mean[ch] =
                T::from_f64((1.0 - m) * self.running_mean[ch].to_f64() + m * mean);
            self.running_var[ch] =
                T::from_f64((1.0 - m) * self.running_var[ch].to_f64() + m * var);
        }
        self.cache = Some(BnCache { x_hat, inv_std });
        y
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let (bsz, c, len) = x.shape();
        assert_eq!(c, self.c, "batchnorm channel mismatch");
        let mut y = TensorBCL::zeros(bsz, c, len);
        for ch in 0..c {
            let mean = self.running_mean[ch].to_f64();
            let istd = 1.0 / (self.running_var[ch].to_f64() + self.eps).sqrt();
            let (g, bt) = (self.gamma[ch], self.beta[ch]);
            for b in 0..bsz {
                let xr = x.row(b, ch);
                let yr = y.row_mut(b, ch);
                for (o, &v) in yr.iter_mut().zip(xr) {
                    *o = g * T::from_f64((v.to_f64() - mean) * istd) + bt;
                }
            }
        }
        y
    }

    fn backward(&mut self, grad_out: &TensorBCL<T>) -> TensorBCL<T> {
        let BnCache { x_hat, inv_std } =
            self.cache.take().expect("backward before forward_train");
        let (bsz, c, len) = x_hat.shape();
        assert_eq!(grad_out.shape(), (bsz, c, len));
        let n = (bsz * len) as f64;
        let mut dx = TensorBCL::zeros(bsz, c, len);
        for ch in 0..c {
            let mut s1 = 0.0f64;
            let mut s2 = 0.0f64;
            for b in 0..bsz {
                let dyr = grad_out.row(b, ch);
                let hr = x_hat.row(b, ch);
                for (&g, &h) in dyr.iter().zip(hr) {
                    s1 += g.to_f64();
                    s2 += g.to_f64() * h.to_f64();
                }
            }
            self.bgrad[ch] += T::from_f64(s1);
            self.ggrad[ch] += T::from_f64(s2);
            let scale = self.gamma[ch].to_f64() * inv_std[ch];
            for b in 0..bsz {
                let dyr = grad_out.row(b, ch);
                let hr = x_hat.row(b, ch);
                let dxr = dx.row_mut(b, ch);
                for l in 0..len {
                    let term = dyr[l].to_f64() - s1 / n - hr[l].to_f64() * s2 / n;
                    dxr[l] = T::from_f64(scale * term);
                }
            }
        }
        dx
    }

    fn zero_grad(&mut self) {
        self.ggrad.iter_mut().for_each(|g| *g = T::ZERO);
        self.bgrad.iter_mut().for_each(|g| *g = T::ZERO);
    }

    fn visit<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(ParamView<'a, T>)) {
        f(ParamView {
            name: format!("{prefix}gamma"),
            kind: ParamKind::Learnable,
            shape: vec![self.c],
            values: &mut self.gamma,
            grads: Some(&mut self.ggrad),
        });
        f(ParamView {
            name: format!("{prefix}beta"),
            kind: ParamKind::Learnable,
            shape: vec![self.c],
            values: &mut self.beta,
            grads: Some(&mut self.bgrad),
        });
        f(ParamView {
            name: format!("{prefix}running_mean"),
            kind: ParamKind::Buffer,
            shape: vec![self.c],
            values: &mut self.running_mean,
            grads: None,
        });
        f(ParamView {
            name: format!("{prefix}running_var"),
            kind: ParamKind::Buffer,
            shape: vec![self.c],
            values: &mut self.running_var,
            grads: None,
        });
    }
}

/// Elementwise ReLU.
pub struct Relu<T> {
    cache_x: Option<TensorBCL<T>>,
}

impl<T: Float> Relu<T> {
    pub fn new() -> Self {
        Relu { cache_x: None }
    }
}

impl<T: Float> Default for Relu<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Float> Layer<T> for Relu<T> {
    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        self.cache_x = Some(x.clone());
        self.forward_eval(x)
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let mut y = x.clone();
        y.data_mut().iter_mut().for_each(|v| *v = v.maxv(T::ZERO));
        y
    }

    fn backward(&mut self, grad_out: &TensorBCL<T>) -> TensorBCL<T> {
        let x = self.cache_x.take().expect("backward before forward_train");
        assert_eq!(grad_out.shape(), x.shape());
        let mut dx = grad_out.clone();
        for (d, &v) in dx.data_mut().iter_mut().zip(x.data()) {
            if v <= T::ZERO {
                *d = T::ZERO;
            }
        }
        dx
    }

    fn zero_grad(&mut self) {}

    fn visit<'a>(&'a mut self, _prefix: &str, _f: &mut dyn FnMut(ParamView<'a, T>)) {}
}

/// Elementwise stable sigmoid.
pub struct Sigmoid<T> {
    cache_y: Option<TensorBCL<T>>,
}

impl<T: Float> Sigmoid<T> {
    pub fn new() -> Self {
        Sigmoid { cache_y: None }
    }
}

impl<T: Float> Default for Sigmoid<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Float> Layer<T> for Sigmoid<T> {
    fn forward_train(&mut self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let y = self.forward_eval(x);
        self.cache_y = Some(y.clone());
        y
    }

    fn forward_eval(&self, x: &TensorBCL<T>) -> TensorBCL<T> {
        let mut y = x.clone();
        y.data_mut().iter_mut().for_each(|v| *v = sigmoid_scalar(*v));
        y
    }

    fn backward(&mut self, grad_out: &TensorBCL<T>) -> TensorBCL<T> {
        let y = self.cache_y.take().expect("backward before forward_train");
        assert_eq!(grad_out.shape(), y.shape());
        let mut dx = grad_out.clone();
        for (d, &s) in dx.data_mut().iter_mut().zip(y.data()) {
            *d = *d * s * (T::ONE - s);
        }
        dx
    }

    fn zero_grad(&mut self) {}

    fn visit<'a>(&'a mut self, _prefix: &str, _f: &mut dyn FnMut(ParamView<'a, T>)) {}
}

/// Concatenates along the channel dimension.
pub fn concat_channels<T: Float>(a: &TensorBCL<T>, b: &TensorBCL<T>) -> TensorBCL<T> {
    let (ba, ca, la) = a.shape();
    let (bb, cb, lb) = b.shape();
    assert_eq!((ba, la), (bb, lb), "concat batch/length mismatch");
    let mut y = TensorBCL::zeros(ba, ca + cb, la);
    for bi in 0..ba {
        for c in 0..ca {
            y.row_mut(bi, c).copy_from_slice(a.row(bi, c));
        }
        for c in 0..cb {
            y.row_mut(bi, ca + c).copy_from_slice(b.row(bi, c));
        }
    }
    y
}

/// Splits a gradient of a concatenated tensor back into the two parts.
pub fn split_channels<T: Float>(g: &TensorBCL<T>, c_first: usize) -> (TensorBCL<T>, TensorBCL<T>) {
    let (bsz, c, len) = g.shape();
    assert!(c_first <= c, "split beyond channel count");
    let mut a = TensorBCL::zeros(bsz, c_first, len);
    let mut b = TensorBCL::zeros(bsz, c - c_first, len);
    for bi in 0..bsz {
        for ch in 0..c_first {
            a.row_mut(bi, ch).copy_from_slice(g.row(bi, ch));
        }
        for ch in c_first..c {
            b.row_mut(bi, ch - c_first).copy_from_slice(g.row(bi, ch));
        }
    }
    (a, b)
}
