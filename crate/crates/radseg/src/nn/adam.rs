//! Adam optimiser over the canonical parameter order.

use super::{Float, Layer, ParamKind, ParamView};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam state: step count plus first/second moments laid out flat in the
/// model's visit order. The moment buffers are sized on the first step and
/// must match on every later step.
pub struct Adam<T> {
    pub cfg: AdamConfig,
    t: u64,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Float> Adam<T> {
    pub fn new(cfg: AdamConfig) -> Self {
        Adam {
            cfg,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Moment buffers and step count, for checkpointing.
    pub fn state(&self) -> (u64, &[T], &[T]) {
        (self.t, &self.m, &self.v)
    }

    pub fn restore_state(&mut self, t: u64, m: Vec<T>, v: Vec<T>) {
        assert_eq!(m.len(), v.len(), "adam moment buffers must match");
        self.t = t;
        self.m = m;
        self.v = v;
    }

    /// One update over every learnable parameter the visitor yields.
    pub fn step<F>(&mut self, visit: F)
    where
        F: FnOnce(&mut dyn FnMut(ParamView<'_, T>)),
    {
        self.t += 1;
        let first = self.m.is_empty();
        let lr = self.cfg.lr;
        let (b1, b2, eps) = (self.cfg.beta1, self.cfg.beta2, self.cfg.eps);
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        let mut offset = 0usize;
        let m = &mut self.m;
        let v = &mut self.v;
        visit(&mut |view: ParamView<'_, T>| {
            if view.kind != ParamKind::Learnable {
                return;
            }
            let grads = view.grads.expect("learnable parameter without gradient");
            let len = view.values.len();
            if first && m.len() == offset {
                m.resize(offset + len, T::ZERO);
                v.resize(offset + len, T::ZERO);
            }
            assert!(
                m.len() >= offset + len,
                "parameter set changed under the optimiser"
            );
            for i in 0..len {
                let g = grads[i].to_f64();
                let mi = b1 * m[offset + i].to_f64() + (1.0 - b1) * g;
                let vi = b2 * v[offset + i].to_f64() + (1.0 - b2) * g * g;
                m[offset + i] = T::from_f64(mi);
                v[offset + i] = T::from_f64(vi);
                let m_hat = mi / bc1;
                let v_hat = vi / bc2;
                let p = view.values[i].to_f64();
                view.values[i] = T::from_f64(p - lr * m_hat / (v_hat.sqrt() + eps));
            }
            offset += len;
        });
        assert_eq!(
            offset,
            self.m.len(),
            "parameter set changed under the optimiser"
        );
    }

    /// Convenience for anything implementing [`Layer`].
    pub fn step_layer(&mut self, layer: &mut dyn Layer<T>) {
        self.step(|f| layer.visit("", f));
    }
}
