//! Adam with bias correction.

use super::params::ParamStore;
use super::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 2e-4,
            beta1: 0.0,
            beta2: 0.9,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for every parameter of one [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Tensor<T>>,
    pub s: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, params: &ParamStore<T>) -> Self {
        let zeros = || {
            params
                .params()
                .iter()
                .map(|p| Tensor::zeros(p.value.shape()))
                .collect()
        };
        AdamState {
            config,
            step: 0,
            m: zeros(),
            s: zeros(),
        }
    }

    /// One update from the gradient slots. Gradients are left untouched.
    pub fn step(&mut self, params: &mut ParamStore<T>) {
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bc1 = T::from_f64_lossy(1.0 - c.beta1.powi(t));
        let bc2 = T::from_f64_lossy(1.0 - c.beta2.powi(t));
        let (b1, b2) = (T::from_f64_lossy(c.beta1), T::from_f64_lossy(c.beta2));
        let (lr, eps) = (T::from_f64_lossy(c.lr), T::from_f64_lossy(c.eps));
        let one = T::one();
        for ((p, m), s) in params
            .params_mut()
            .iter_mut()
            .zip(&mut self.m)
            .zip(&mut self.s)
        {
            let grad = p.grad.data();
            for (((w, &g), mi), si) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(grad)
                .zip(m.data_mut())
                .zip(s.data_mut())
            {
                *mi = b1 * *mi + (one - b1) * g;
                *si = b2 * *si + (one - b2) * g * g;
                let m_hat = *mi / bc1;
                let s_hat = *si / bc2;
                *w = *w - lr * m_hat / (s_hat.sqrt() + eps);
            }
        }
    }
}
