//! Named parameter and buffer storage with gradient slots.

use crate::error::{Error, Result};

use super::graph::{Gradients, Graph, Var};
use super::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferId(usize);

/// A trainable tensor and its gradient slot (always the same shape).
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

/// Non-trainable state: batch-norm running statistics, power-iteration vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Buffer<T> {
    pub name: String,
    pub value: Tensor<T>,
}

/// All parameters and buffers of one network.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
    buffers: Vec<Buffer<T>>,
}

/// Graph leaves created for a store by [`ParamStore::bind`].
#[derive(Debug, Clone)]
pub struct Binding {
    vars: Vec<Var>,
    trainable: bool,
}

impl Binding {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            params: Vec::new(),
            buffers: Vec::new(),
        }
    }

    pub fn add_param(&mut self, name: impl Into<String>, value: Tensor<T>) -> ParamId {
        let grad = Tensor::zeros(value.shape());
        self.params.push(Param {
            name: name.into(),
            value,
            grad,
        });
        ParamId(self.params.len() - 1)
    }

    pub fn add_buffer(&mut self, name: impl Into<String>, value: Tensor<T>) -> BufferId {
        self.buffers.push(Buffer {
            name: name.into(),
            value,
        });
        BufferId(self.buffers.len() - 1)
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    pub fn buffers(&self) -> &[Buffer<T>] {
        &self.buffers
    }

    pub fn param(&self, id: ParamId) -> &Param<T> {
        &self.params[id.0]
    }

    pub fn param_mut(&mut self, id: ParamId) -> &mut Param<T> {
        &mut self.params[id.0]
    }

    pub fn buffer(&self, id: BufferId) -> &Tensor<T> {
        &self.buffers[id.0].value
    }

    pub fn buffer_mut(&mut self, id: BufferId) -> &mut Tensor<T> {
        &mut self.buffers[id.0].value
    }

    /// Two buffers borrowed mutably at once.
    pub fn buffer_pair_mut(&mut self, a: BufferId, b: BufferId) -> (&mut [T], &mut [T]) {
        assert_ne!(a.0, b.0, "distinct buffers required");
        if a.0 < b.0 {
            let (lo, hi) = self.buffers.split_at_mut(b.0);
            (lo[a.0].value.data_mut(), hi[0].value.data_mut())
        } else {
            let (lo, hi) = self.buffers.split_at_mut(a.0);
            (hi[0].value.data_mut(), lo[b.0].value.data_mut())
        }
    }

    /// Puts every parameter on the tape. Frozen bindings create constant
    /// leaves, so no weight gradients are computed for them.
    pub fn bind(&self, graph: &mut Graph<T>, trainable: bool) -> Binding {
        let vars = self
            .params
            .iter()
            .map(|p| {
                if trainable {
                    graph.param(p.value.clone())
                } else {
                    graph.input(p.value.clone())
                }
            })
            .collect();
        Binding { vars, trainable }
    }

    /// Adds the tape gradients of a trainable binding into the gradient slots.
    pub fn accumulate_grads(&mut self, grads: &Gradients<T>, binding: &Binding) {
        if !binding.trainable {
            return;
        }
        for (p, &v) in self.params.iter_mut().zip(&binding.vars) {
            if let Some(g) = grads.get(v) {
                p.grad.add_assign(g);
            }
        }
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.data_mut().fill(T::zero());
        }
    }

    pub fn grads_all_zero(&self) -> bool {
        self.params
            .iter()
            .all(|p| p.grad.data().iter().all(|v| *v == T::zero()))
    }

    pub fn num_elements(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Every named tensor, parameters first, in a stable order.
    pub fn named_tensors(&self) -> Vec<(&str, &Tensor<T>)> {
        self.params
            .iter()
            .map(|p| (p.name.as_str(), &p.value))
            .chain(self.buffers.iter().map(|b| (b.name.as_str(), &b.value)))
            .collect()
    }

    /// Overwrites a parameter or buffer by name; shapes must agree.
    pub fn assign(&mut self, name: &str, value: &Tensor<T>) -> Result<()> {
        let slot = self
            .params
            .iter_mut()
            .map(|p| (&p.name, &mut p.value))
            .chain(self.buffers.iter_mut().map(|b| (&b.name, &mut b.value)))
            .find(|(n, _)| n.as_str() == name)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::Checkpoint(format!("unknown tensor '{name}'")))?;
        if slot.shape() != value.shape() {
            return Err(Error::Checkpoint(format!(
                "tensor '{name}' has shape {:?}, checkpoint holds {:?}",
                slot.shape(),
                value.shape()
            )));
        }
        *slot = value.clone();
        Ok(())
    }
}
