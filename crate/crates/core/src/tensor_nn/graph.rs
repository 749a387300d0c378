//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] records every operation applied during one forward pass.
//! [`Graph::backward`] walks the tape in reverse from a scalar loss and returns
//! [`Gradients`] for every node that requires them. Values created with
//! [`Graph::input`] or [`Graph::detach`] never receive gradient, which is how
//! stop-gradient is expressed.

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::spectral::{self, PhiSaved};

use super::ops::{self, BatchNormForward, ConvGeometry};
use super::tensor::{Scalar, Tensor};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T: Scalar> {
    Leaf,
    Conv {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        cols: Vec<T>,
        geometry: ConvGeometry,
    },
    Linear {
        input: Var,
        weight: Var,
        bias: Option<Var>,
    },
    BatchNorm {
        input: Var,
        gamma: Var,
        beta: Var,
        saved: BatchNormForward<T>,
    },
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    AvgPool2(Var),
    Upsample2(Var),
    HaarDwt(Var),
    Add(Var, Var),
    Affine {
        input: Var,
        scale: T,
    },
    MulConst {
        input: Var,
        factor: Vec<T>,
    },
    Mix {
        x: Var,
        c: Var,
        lambda: T,
    },
    Clamp {
        input: Var,
        lo: T,
        hi: T,
    },
    Log(Var),
    Mean(Var),
    Sum(Var),
    MeanRows(Var),
    SumPool(Var),
    Reshape(Var),
    Concat0(Var, Var),
    Slice0 {
        input: Var,
        start: usize,
    },
    SpectralNorm {
        weight: Var,
        u: Vec<T>,
        v: Vec<T>,
        sigma: T,
    },
    Phi {
        input: Var,
        saved: Vec<PhiSaved>,
    },
    LogBlend {
        logits: Var,
        slope: Vec<T>,
    },
}

struct Node<T: Scalar> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Recorded forward computation.
pub struct Graph<T: Scalar> {
    nodes: Vec<Node<T>>,
    exec: Execution,
}

/// Result of [`Graph::backward`]: one optional gradient per node.
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self::with_execution(Execution::default())
    }

    pub fn with_execution(exec: Execution) -> Self {
        Graph {
            nodes: Vec::new(),
            exec,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|&v| self.nodes[v.0].requires_grad)
    }

    /// Constant leaf; receives no gradient.
    pub fn input(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Copy of `v` cut off from the tape: gradient stops here.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.nodes[v.0].value.clone();
        self.input(value)
    }

    pub fn conv2d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        stride: usize,
        pad: usize,
    ) -> Result<Var> {
        let fwd = ops::conv2d_forward(
            self.exec,
            self.value(input),
            self.value(weight),
            bias.map(|b| self.value(b)),
            stride,
            pad,
        )?;
        let mut deps = vec![input, weight];
        deps.extend(bias);
        let rg = self.rg(&deps);
        Ok(self.push(
            fwd.output,
            Op::Conv {
                input,
                weight,
                bias,
                cols: fwd.cols,
                geometry: fwd.geometry,
            },
            rg,
        ))
    }

    pub fn linear(&mut self, input: Var, weight: Var, bias: Option<Var>) -> Result<Var> {
        let out = ops::linear_forward(
            self.value(input),
            self.value(weight),
            bias.map(|b| self.value(b)),
        )?;
        let mut deps = vec![input, weight];
        deps.extend(bias);
        let rg = self.rg(&deps);
        Ok(self.push(
            out,
            Op::Linear {
                input,
                weight,
                bias,
            },
            rg,
        ))
    }

    pub fn batchnorm(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        running_mean: &mut [T],
        running_var: &mut [T],
        training: bool,
    ) -> Result<Var> {
        let mut saved = ops::batchnorm_forward(
            self.value(input),
            self.value(gamma),
            self.value(beta),
            running_mean,
            running_var,
            training,
        )?;
        let out = std::mem::replace(&mut saved.output, Tensor::scalar(T::zero()));
        let rg = self.rg(&[input, gamma, beta]);
        Ok(self.push(
            out,
            Op::BatchNorm {
                input,
                gamma,
                beta,
                saved,
            },
            rg,
        ))
    }

    fn unary(&mut self, input: Var, f: impl Fn(T) -> T, op: Op<T>) -> Var {
        let out = self.value(input).map(f);
        let rg = self.rg(&[input]);
        self.push(out, op, rg)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(
            x,
            |v| if v > T::zero() { v } else { T::zero() },
            Op::Relu(x),
        )
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.tanh(), Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.ln(), Op::Log(x))
    }

    /// `scale * x + shift` with constant scalars.
    pub fn affine(&mut self, x: Var, scale: T, shift: T) -> Var {
        self.unary(x, |v| scale * v + shift, Op::Affine { input: x, scale })
    }

    pub fn clamp(&mut self, x: Var, lo: T, hi: T) -> Var {
        self.unary(x, |v| v.max(lo).min(hi), Op::Clamp { input: x, lo, hi })
    }

    /// Elementwise product with a constant tensor of the same shape.
    pub fn mul_const(&mut self, x: Var, factor: &Tensor<T>) -> Result<Var> {
        let xv = self.value(x);
        if xv.shape() != factor.shape() {
            return Err(Error::shape(format!(
                "mul_const: {:?} vs {:?}",
                xv.shape(),
                factor.shape()
            )));
        }
        let data = xv
            .data()
            .iter()
            .zip(factor.data())
            .map(|(&a, &b)| a * b)
            .collect();
        let out = Tensor::new(xv.shape(), data)?;
        let rg = self.rg(&[x]);
        Ok(self.push(
            out,
            Op::MulConst {
                input: x,
                factor: factor.data().to_vec(),
            },
            rg,
        ))
    }

    fn same_shape(&self, op: &str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::shape(format!("{op}: {sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let (va, vb) = (self.value(a), self.value(b));
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(&x, &y)| x + y)
            .collect();
        let out = Tensor::new(va.shape(), data)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    /// `lambda * x + (1 - lambda) * c`.
    pub fn mix(&mut self, x: Var, c: Var, lambda: T) -> Result<Var> {
        self.same_shape("mix", x, c)?;
        let rest = T::one() - lambda;
        let (vx, vc) = (self.value(x), self.value(c));
        let data = vx
            .data()
            .iter()
            .zip(vc.data())
            .map(|(&a, &b)| lambda * a + rest * b)
            .collect();
        let out = Tensor::new(vx.shape(), data)?;
        let rg = self.rg(&[x, c]);
        Ok(self.push(out, Op::Mix { x, c, lambda }, rg))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let n = T::from_usize(v.len()).unwrap();
        let out = Tensor::scalar(v.sum() / n);
        let rg = self.rg(&[x]);
        self.push(out, Op::Mean(x), rg)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let out = Tensor::scalar(self.value(x).sum());
        let rg = self.rg(&[x]);
        self.push(out, Op::Sum(x), rg)
    }

    /// Mean over the leading axis: `[B, D] -> [1, D]`.
    pub fn mean_rows(&mut self, x: Var) -> Result<Var> {
        let (b, d) = self.value(x).dims2()?;
        let data = self.value(x).data();
        let n = T::from_usize(b).unwrap();
        let mut out = vec![T::zero(); d];
        for row in data.chunks(d) {
            for (o, &v) in out.iter_mut().zip(row) {
                *o = *o + v;
            }
        }
        for o in out.iter_mut() {
            *o = *o / n;
        }
        let out = Tensor::new(&[1, d], out)?;
        let rg = self.rg(&[x]);
        Ok(self.push(out, Op::MeanRows(x), rg))
    }

    /// Global sum over the spatial axes: `[B, C, H, W] -> [B, C]`.
    pub fn sum_pool(&mut self, x: Var) -> Result<Var> {
        let (b, c, h, w) = self.value(x).dims4()?;
        let out: Vec<T> = self
            .value(x)
            .data()
            .chunks(h * w)
            .map(|p| p.iter().fold(T::zero(), |a, &v| a + v))
            .collect();
        let out = Tensor::new(&[b, c], out)?;
        let rg = self.rg(&[x]);
        Ok(self.push(out, Op::SumPool(x), rg))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(x).clone().reshape(shape)?;
        let rg = self.rg(&[x]);
        Ok(self.push(out, Op::Reshape(x), rg))
    }

    /// Concatenation along the leading axis.
    pub fn concat0(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape()[1..] != vb.shape()[1..] {
            return Err(Error::shape(format!(
                "concat0: {:?} vs {:?}",
                va.shape(),
                vb.shape()
            )));
        }
        let mut shape = va.shape().to_vec();
        shape[0] += vb.shape()[0];
        let mut data = va.data().to_vec();
        data.extend_from_slice(vb.data());
        let out = Tensor::new(&shape, data)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::Concat0(a, b), rg))
    }

    /// Rows `start..start + len` of the leading axis.
    pub fn slice0(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let v = self.value(x);
        let n0 = v.shape()[0];
        if len == 0 || start + len > n0 {
            return Err(Error::shape(format!(
                "slice0: rows {start}..{} out of {n0}",
                start + len
            )));
        }
        let stride = v.len() / n0;
        let mut shape = v.shape().to_vec();
        shape[0] = len;
        let out = Tensor::new(
            &shape,
            v.data()[start * stride..(start + len) * stride].to_vec(),
        )?;
        let rg = self.rg(&[x]);
        Ok(self.push(out, Op::Slice0 { input: x, start }, rg))
    }

    pub fn avgpool2(&mut self, x: Var) -> Result<Var> {
        let out = ops::avgpool2_forward(self.value(x))?;
        let rg = self.rg(&[x]);
        Ok(self.push(out, Op::AvgPool2(x), rg))
    }

    pub fn upsample2(&mut self, x: Var) -> Result<Var> {
        let out = ops::upsample2_forward(self.value(x))?;
        let rg = self.rg(&[x]);
        Ok(self.push(out, Op::Upsample2(x), rg))
    }

    pub fn haar_dwt(&mut self, x: Var) -> Result<Var> {
        let out = ops::haar_dwt_forward(self.value(x))?;
        let rg = self.rg(&[x]);
        Ok(self.push(out, Op::HaarDwt(x), rg))
    }

    /// `W / (u^T W v)` with `u`, `v` treated as constants.
    pub fn spectral_norm(&mut self, weight: Var, u: Vec<T>, v: Vec<T>) -> Result<Var> {
        let (rows, cols) = ops::matrix_dims(self.value(weight));
        if u.len() != rows || v.len() != cols {
            return Err(Error::shape(format!(
                "spectral_norm: u/v lengths {}/{} for a {rows}x{cols} matrix",
                u.len(),
                v.len()
            )));
        }
        let (out, sigma) = ops::spectral_norm_forward(self.value(weight), &u, &v);
        let rg = self.rg(&[weight]);
        Ok(self.push(
            out,
            Op::SpectralNorm {
                weight,
                u,
                v,
                sigma,
            },
            rg,
        ))
    }

    /// Reduced spectral representation of each single-channel image:
    /// `[B, 1, H, W] -> [B, R + 1]`.
    pub fn phi(&mut self, x: Var) -> Result<Var> {
        let (b, c, h, w) = self.value(x).dims4()?;
        if c != 1 {
            return Err(Error::shape(format!(
                "phi node expects single-channel images, got {c} channels"
            )));
        }
        let data = self.value(x).data();
        let mut saved = Vec::with_capacity(b);
        let mut out = Vec::new();
        for plane in data.chunks(h * w) {
            let plane: Vec<f64> = plane.iter().map(|v| v.to_f64_lossy()).collect();
            let (phi, s) = spectral::phi_with_saved(&plane, h, w);
            out.extend(phi.iter().map(|&v| T::from_f64_lossy(v)));
            saved.push(s);
        }
        let len = out.len() / b;
        let out = Tensor::new(&[b, len], out)?;
        let rg = self.rg(&[x]);
        Ok(self.push(out, Op::Phi { input: x, saved }, rg))
    }

    /// `log(lambda * sigmoid(l) + (1 - lambda) * c)` per element, or with
    /// `complement` the log of one minus that, evaluated in log space and
    /// clamped to `log_range`. Without `c` the blend is `sigmoid(l)` alone.
    ///
    /// `c` is read as a constant. The gradient with respect to the logits
    /// is that of the unclamped expression, so a saturated probability
    /// still passes a gradient.
    pub fn log_blend(
        &mut self,
        logits: Var,
        c: Option<Var>,
        lambda: T,
        complement: bool,
        log_range: (T, T),
    ) -> Result<Var> {
        if let Some(c) = c {
            self.same_shape("log_blend", logits, c)?;
        }
        let lambda = if c.is_some() { lambda } else { T::one() };
        let ln_lambda = lambda.ln();
        let ln_rest = (T::one() - lambda).ln();
        let ls = self.value(logits).data();
        let cs = c.map(|c| self.value(c).data());
        let mut out = Vec::with_capacity(ls.len());
        let mut slope = Vec::with_capacity(ls.len());
        for (i, &l) in ls.iter().enumerate() {
            let (s, sign) = if complement {
                (-l, -T::one())
            } else {
                (l, T::one())
            };
            let mut log_q = ln_lambda + log_sigmoid(s);
            if let Some(cs) = cs {
                let cc = if complement { T::one() - cs[i] } else { cs[i] };
                log_q = log_add_exp(log_q, ln_rest + cc.ln());
            }
            let d = if log_q == T::neg_infinity() {
                T::zero()
            } else {
                sign * (ln_lambda + log_sigmoid(l) + log_sigmoid(-l) - log_q).exp()
            };
            out.push(log_q.max(log_range.0).min(log_range.1));
            slope.push(d);
        }
        let out = Tensor::new(self.value(logits).shape(), out)?;
        let rg = self.rg(&[logits]);
        Ok(self.push(out, Op::LogBlend { logits, slope }, rg))
    }

    /// Reverse-mode sweep from a single-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::shape(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        if !self.nodes[loss.0].requires_grad {
            return Ok(Gradients { grads });
        }
        grads[loss.0] = Some(Tensor::full(self.nodes[loss.0].value.shape(), T::one()));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else {
                continue;
            };
            if !self.nodes[i].requires_grad {
                grads[i] = Some(g);
                continue;
            }
            self.propagate(i, &g, &mut grads)?;
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(acc) => acc.add_assign(&g),
            slot => *slot = Some(g),
        }
    }

    fn propagate(&self, i: usize, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) -> Result<()> {
        let node = &self.nodes[i];
        let out = &node.value;
        let zip_map = |src: &Tensor<T>, f: &dyn Fn(T, T, T) -> T| -> Tensor<T> {
            let data = src
                .data()
                .iter()
                .zip(out.data())
                .zip(g.data())
                .map(|((&x, &y), &gv)| f(x, y, gv))
                .collect();
            Tensor::new(src.shape(), data).expect("shape preserved")
        };
        match &node.op {
            Op::Leaf => {}
            Op::Conv {
                input,
                weight,
                bias,
                cols,
                geometry,
            } => {
                let r = ops::conv2d_backward(
                    self.exec,
                    geometry,
                    cols,
                    self.value(*weight),
                    g,
                    self.requires_grad(*input),
                    self.requires_grad(*weight),
                    bias.is_some_and(|b| self.requires_grad(b)),
                )?;
                if let Some(gi) = r.input {
                    self.accumulate(grads, *input, gi);
                }
                if let Some(gw) = r.weight {
                    self.accumulate(grads, *weight, gw);
                }
                if let (Some(b), Some(gb)) = (bias, r.bias) {
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Linear {
                input,
                weight,
                bias,
            } => {
                let (dx, dw, db) =
                    ops::linear_backward(self.value(*input), self.value(*weight), g)?;
                self.accumulate(grads, *input, dx);
                self.accumulate(grads, *weight, dw);
                if let Some(b) = bias {
                    self.accumulate(grads, *b, db);
                }
            }
            Op::BatchNorm {
                input,
                gamma,
                beta,
                saved,
            } => {
                let (dx, dg, db) = ops::batchnorm_backward(saved, self.value(*gamma), g)?;
                self.accumulate(grads, *input, dx);
                self.accumulate(grads, *gamma, dg);
                self.accumulate(grads, *beta, db);
            }
            Op::Relu(x) => {
                let d = zip_map(self.value(*x), &|x, _, gv| {
                    if x > T::zero() {
                        gv
                    } else {
                        T::zero()
                    }
                });
                self.accumulate(grads, *x, d);
            }
            Op::Tanh(x) => {
                let d = zip_map(self.value(*x), &|_, y, gv| gv * (T::one() - y * y));
                self.accumulate(grads, *x, d);
            }
            Op::Sigmoid(x) => {
                let d = zip_map(self.value(*x), &|_, y, gv| gv * y * (T::one() - y));
                self.accumulate(grads, *x, d);
            }
            Op::Log(x) => {
                let d = zip_map(self.value(*x), &|x, _, gv| gv / x);
                self.accumulate(grads, *x, d);
            }
            Op::Affine { input, scale } => {
                let s = *scale;
                self.accumulate(grads, *input, g.map(|gv| gv * s));
            }
            Op::Clamp { input, lo, hi } => {
                let (lo, hi) = (*lo, *hi);
                let d = zip_map(self.value(*input), &|x, _, gv| {
                    if x >= lo && x <= hi {
                        gv
                    } else {
                        T::zero()
                    }
                });
                self.accumulate(grads, *input, d);
            }
            Op::MulConst { input, factor } => {
                let data = g.data().iter().zip(factor).map(|(&a, &b)| a * b).collect();
                self.accumulate(grads, *input, Tensor::new(g.shape(), data)?);
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Mix { x, c, lambda } => {
                let l = *lambda;
                self.accumulate(grads, *x, g.map(|gv| gv * l));
                let rest = T::one() - l;
                self.accumulate(grads, *c, g.map(|gv| gv * rest));
            }
            Op::Mean(x) => {
                let src = self.value(*x);
                let n = T::from_usize(src.len()).unwrap();
                self.accumulate(grads, *x, Tensor::full(src.shape(), g.data()[0] / n));
            }
            Op::Sum(x) => {
                let src = self.value(*x);
                self.accumulate(grads, *x, Tensor::full(src.shape(), g.data()[0]));
            }
            Op::MeanRows(x) => {
                let src = self.value(*x);
                let (b, d) = src.dims2()?;
                let n = T::from_usize(b).unwrap();
                let row: Vec<T> = g.data().iter().map(|&v| v / n).collect();
                let data = (0..b).flat_map(|_| row.iter().copied()).collect();
                self.accumulate(grads, *x, Tensor::new(&[b, d], data)?);
            }
            Op::SumPool(x) => {
                let src = self.value(*x);
                let (_, _, h, w) = src.dims4()?;
                let data = g
                    .data()
                    .iter()
                    .flat_map(|&v| std::iter::repeat_n(v, h * w))
                    .collect();
                self.accumulate(grads, *x, Tensor::new(src.shape(), data)?);
            }
            Op::Reshape(x) => {
                let d = g.clone().reshape(self.value(*x).shape())?;
                self.accumulate(grads, *x, d);
            }
            Op::Concat0(a, b) => {
                let na = self.value(*a).len();
                let ga = Tensor::new(self.value(*a).shape(), g.data()[..na].to_vec())?;
                let gb = Tensor::new(self.value(*b).shape(), g.data()[na..].to_vec())?;
                self.accumulate(grads, *a, ga);
                self.accumulate(grads, *b, gb);
            }
            Op::Slice0 { input, start } => {
                let src = self.value(*input);
                let stride = src.len() / src.shape()[0];
                let mut data = vec![T::zero(); src.len()];
                data[start * stride..start * stride + g.len()].copy_from_slice(g.data());
                self.accumulate(grads, *input, Tensor::new(src.shape(), data)?);
            }
            Op::AvgPool2(x) => {
                let d = ops::avgpool2_backward(self.value(*x).shape(), g)?;
                self.accumulate(grads, *x, d);
            }
            Op::Upsample2(x) => {
                let d = ops::upsample2_backward(self.value(*x).shape(), g)?;
                self.accumulate(grads, *x, d);
            }
            Op::HaarDwt(x) => {
                let d = ops::haar_dwt_backward(self.value(*x).shape(), g)?;
                self.accumulate(grads, *x, d);
            }
            Op::SpectralNorm {
                weight,
                u,
                v,
                sigma,
            } => {
                let d = ops::spectral_norm_backward(out, *sigma, u, v, g);
                self.accumulate(grads, *weight, d);
            }
            Op::LogBlend { logits, slope } => {
                let data = g.data().iter().zip(slope).map(|(&a, &b)| a * b).collect();
                self.accumulate(grads, *logits, Tensor::new(g.shape(), data)?);
            }
            Op::Phi { input, saved } => {
                let src = self.value(*input);
                let (b, _, h, w) = src.dims4()?;
                let len = g.len() / b;
                let mut data = Vec::with_capacity(src.len());
                for (s, gr) in saved.iter().zip(g.data().chunks(len)) {
                    let gr: Vec<f64> = gr.iter().map(|v| v.to_f64_lossy()).collect();
                    let dx = spectral::phi_backward(s, &gr, h, w);
                    data.extend(dx.into_iter().map(T::from_f64_lossy));
                }
                self.accumulate(grads, *input, Tensor::new(src.shape(), data)?);
            }
        }
        Ok(())
    }
}

/// `log(sigmoid(v))` without overflow.
pub fn log_sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        -(-v).exp().ln_1p()
    } else {
        v - v.exp().ln_1p()
    }
}

/// `log(exp(a) + exp(b))`; returns `a` unchanged when `b` is `-inf`.
pub fn log_add_exp<T: Scalar>(a: T, b: T) -> T {
    if b == T::neg_infinity() {
        return a;
    }
    if a == T::neg_infinity() {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Numerically stable logistic function.
pub fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}
