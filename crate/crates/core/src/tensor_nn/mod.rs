//! Minimal differentiable numerical core: dense tensors, the layer set used
//! by the generator and discriminator, reverse-mode gradients and Adam.

mod adam;
pub mod gradcheck;
mod graph;
pub mod layers;
pub mod ops;
mod params;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use graph::{log_add_exp, log_sigmoid, sigmoid, Gradients, Graph, Var};
pub use layers::Mode;
pub use params::{Binding, Buffer, BufferId, Param, ParamId, ParamStore};
pub use tensor::{Scalar, Tensor};
