//! Topology-guided image classification.
//!
//! A persistence diagram, packed as a [`PointFeatureMatrix`], is encoded into
//! a vector `t` by a shared per-point MLP followed by a masked max-pool
//! ([`encoder`]). Each convolutional block of a small vision network is then
//! refined channel-wise by `sigmoid(W1 relu(W2 t))` ([`gate`]). A separate
//! head classifies from `t` alone, and training minimizes
//! `CE(vision) + alpha * CE(topo)` ([`train`]).
//!
//! [`PointFeatureMatrix`]: phg_core::diagram::PointFeatureMatrix

pub mod data;
pub mod encoder;
pub mod gate;
pub mod metrics;
pub mod model;
pub mod train;

pub use encoder::PdEncoder;
pub use gate::{refine, Gate};
pub use metrics::Metrics;
pub use model::{ModelConfig, PhgModel, TopoInput, Variant};
pub use train::{evaluate, train, History, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum PhgError {
    #[error(transparent)]
    Nn(#[from] phg_tinynn::NnError),
    #[error(transparent)]
    Diagram(#[from] phg_core::diagram::DiagramError),
    #[error(transparent)]
    Vectorize(#[from] phg_core::vectorize::VectorizeError),
    #[error("configuration error: {0}")]
    Config(String),
}

pub(crate) fn config_err(msg: impl Into<String>) -> PhgError {
    PhgError::Config(msg.into())
}
