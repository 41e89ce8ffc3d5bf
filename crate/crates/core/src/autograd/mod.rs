//! Minimal reverse-mode differentiation over f64 tensors.

pub mod cells;
mod graph;
pub mod gradcheck;
pub(crate) mod kernels;
mod params;
mod tensor;

pub use gradcheck::{analytic_gradients, grad_check, random_projection, GraphBuilder, DEFAULT_EPS};
pub use graph::{Graph, Var, LOG_CLAMP};
pub use params::{load_checkpoint, save_checkpoint, Adam, ParamSet, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use tensor::Tensor;
