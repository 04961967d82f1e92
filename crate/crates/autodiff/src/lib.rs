//! Reverse-mode automatic differentiation over dense row-major tensors.
//!
//! The operator set is deliberately small: stride-1 `conv2d`, strided
//! `conv_transpose2d`, `prelu`, `softmax`, `pixel_shuffle`, `concat`,
//! `permute`/`reshape`, elementwise arithmetic and `l1_loss`. Other crates can
//! register their own differentiable operators through [`Tape::push_op`].

pub mod checkpoint;
mod error;
pub mod gradcheck;
mod init;
pub mod ops;
mod optim;
mod params;
mod scalar;
mod tape;
mod tensor;

pub use checkpoint::Checkpoint;
pub use error::{Result, TensorError};
pub use gradcheck::{central_differences, grad_check, grad_check_at, GradCheckReport};
pub use init::{fans, kaiming_init, FanMode};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use params::{Binding, ParamStore};
pub use scalar::{gemm, MatLayout, Scalar};
pub use tape::{Backward, BackwardCtx, Gradients, Tape, Var};
pub use tensor::{numel, strides, Tensor};
