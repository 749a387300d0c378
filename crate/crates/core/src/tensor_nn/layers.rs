//! Parameterized layers: thin wrappers that own parameter ids in a
//! [`ParamStore`] and emit graph operations.

use crate::error::Result;
use crate::rng::SeededRng;

use super::graph::{Graph, Var};
use super::ops;
use super::params::{Binding, BufferId, ParamId, ParamStore};
use super::tensor::{Scalar, Tensor};

/// Whether a forward pass updates batch statistics and power-iteration state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Glorot-uniform initializer.
fn glorot<T: Scalar>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut SeededRng,
) -> Tensor<T> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| T::from_f64_lossy(rng.uniform(-bound, bound)))
        .collect();
    Tensor::new(shape, data).expect("initializer shape")
}

#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: ParamId,
    pub bias: ParamId,
    pub stride: usize,
    pub pad: usize,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let kk = kernel * kernel;
        let w = glorot(
            &[out_channels, in_channels, kernel, kernel],
            in_channels * kk,
            out_channels * kk,
            rng,
        );
        Conv2d {
            weight: store.add_param(format!("{name}.weight"), w),
            bias: store.add_param(format!("{name}.bias"), Tensor::zeros(&[out_channels])),
            stride,
            pad,
        }
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<T>, b: &Binding, x: Var) -> Result<Var> {
        g.conv2d(
            x,
            b.var(self.weight),
            Some(b.var(self.bias)),
            self.stride,
            self.pad,
        )
    }
}

#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut SeededRng,
    ) -> Self {
        Linear {
            weight: store.add_param(
                format!("{name}.weight"),
                glorot(&[out_dim, in_dim], in_dim, out_dim, rng),
            ),
            bias: store.add_param(format!("{name}.bias"), Tensor::zeros(&[out_dim])),
        }
    }

    /// All-zero weights and bias.
    pub fn zeros<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_dim: usize,
        out_dim: usize,
    ) -> Self {
        Linear {
            weight: store.add_param(format!("{name}.weight"), Tensor::zeros(&[out_dim, in_dim])),
            bias: store.add_param(format!("{name}.bias"), Tensor::zeros(&[out_dim])),
        }
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<T>, b: &Binding, x: Var) -> Result<Var> {
        g.linear(x, b.var(self.weight), Some(b.var(self.bias)))
    }
}

#[derive(Debug, Clone)]
pub struct BatchNorm2d {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: BufferId,
    pub running_var: BufferId,
}

impl BatchNorm2d {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, channels: usize) -> Self {
        BatchNorm2d {
            gamma: store.add_param(format!("{name}.gamma"), Tensor::full(&[channels], T::one())),
            beta: store.add_param(format!("{name}.beta"), Tensor::zeros(&[channels])),
            running_mean: store
                .add_buffer(format!("{name}.running_mean"), Tensor::zeros(&[channels])),
            running_var: store.add_buffer(
                format!("{name}.running_var"),
                Tensor::full(&[channels], T::one()),
            ),
        }
    }

    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        b: &Binding,
        store: &mut ParamStore<T>,
        x: Var,
        mode: Mode,
    ) -> Result<Var> {
        let (rm, rv) = store.buffer_pair_mut(self.running_mean, self.running_var);
        g.batchnorm(
            x,
            b.var(self.gamma),
            b.var(self.beta),
            rm,
            rv,
            mode == Mode::Train,
        )
    }
}

/// Fully connected layer whose weight is divided by a power-iteration estimate
/// of its largest singular value on every forward pass.
#[derive(Debug, Clone)]
pub struct SnLinear {
    pub linear: Linear,
    pub u: BufferId,
    pub power_iterations: usize,
}

impl SnLinear {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let linear = Linear::new(store, name, in_dim, out_dim, rng);
        let mut u: Vec<f64> = (0..out_dim).map(|_| rng.normal()).collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        u.iter_mut().for_each(|x| *x /= norm);
        let u = store.add_buffer(
            format!("{name}.u"),
            Tensor::from_f64(&[out_dim], &u).unwrap(),
        );
        SnLinear {
            linear,
            u,
            power_iterations: 1,
        }
    }

    /// In [`Mode::Train`] the persistent `u` advances by `power_iterations`
    /// steps first; in [`Mode::Eval`] it is only read.
    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        b: &Binding,
        store: &mut ParamStore<T>,
        x: Var,
        mode: Mode,
    ) -> Result<Var> {
        let weight = store.param(self.linear.weight).value.clone();
        let iters = if mode == Mode::Train {
            self.power_iterations
        } else {
            0
        };
        let u = store.buffer_mut(self.u).data_mut();
        let v = ops::power_iteration(&weight, u, iters);
        let u = u.to_vec();
        let w = g.spectral_norm(b.var(self.linear.weight), u, v)?;
        g.linear(x, w, Some(b.var(self.linear.bias)))
    }
}
