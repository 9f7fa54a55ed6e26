//! Dense `f64` tensors with a reverse-mode differentiation tape.
//!
//! Values are recorded on a [`Tape`] as primitives run; [`Tape::backward`]
//! walks the record in reverse and returns gradients for every parameter
//! leaf. All randomness (dropout) comes from caller-supplied generators.

mod check;
mod error;
mod kernels;
mod ops;
mod tape;
mod tensor;

pub use check::{grad_check, grad_check_coords, grad_check_report, GradReport};
pub use error::{NdError, Result};
pub use ops::BatchNormStats;
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
