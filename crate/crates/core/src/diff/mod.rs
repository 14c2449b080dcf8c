//! Reverse-mode gradients and the optimizers that consume them.

mod check;
mod optim;
mod tape;

pub use check::{finite_diff_check, FD_STEP};
pub use optim::{adam_step, radam_step, riemannian_grad, rsgd_step, AdamConfig, Manifold, ParamTensor};
pub use tape::{Gradients, Tape, Var};
