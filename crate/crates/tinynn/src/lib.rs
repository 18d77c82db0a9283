//! A minimal neural-network kernel in 64-bit floats.
//!
//! There is no autograd graph: every operation has a forward function and a
//! matching backward function, and callers wire the chain rule by hand.
//! Parameters live in a [`ParamStore`] so that optimizers, checkpoints and
//! gradient checks can address them uniformly by [`ParamId`].

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod ops;
pub mod optim;
mod tensor;

pub use layers::{Conv2d, Gradients, Linear, ParamId, ParamStore};
pub use optim::{poly_lr, Adam, AdamConfig};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("{op}: shape mismatch, {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("{op}: non-finite value")]
    NonFinite { op: &'static str },
    #[error("{0}")]
    Argument(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> NnError {
    NnError::Shape { op, detail: detail.into() }
}
