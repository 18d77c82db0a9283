//! Channel gate `t' = sigmoid(W1 relu(W2 t))` and feature refinement
//! `F' = F * t'` broadcast over the spatial axes.

use phg_tinynn::ops::{
    channel_scale_backward, channel_scale_forward, relu_backward, relu_forward, sigmoid_backward, sigmoid_forward,
};
use phg_tinynn::{Gradients, Linear, NnError, ParamStore, Tensor};
use rand::Rng;

/// `W2: M -> ceil(C / r)` followed by `W1: ceil(C / r) -> C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub down: Linear,
    pub up: Linear,
    pub ratio: usize,
}

#[derive(Debug, Clone)]
pub struct GateCache {
    t: Tensor,
    down_pre: Tensor,
    hidden: Tensor,
    out: Tensor,
}

/// Width of the gate bottleneck; channel counts that are not a multiple of
/// `ratio` round up.
pub fn bottleneck_width(channels: usize, ratio: usize) -> usize {
    channels.div_ceil(ratio.max(1)).max(1)
}

impl Gate {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        topo_dim: usize,
        channels: usize,
        ratio: usize,
        rng: &mut R,
    ) -> Self {
        let hidden = bottleneck_width(channels, ratio);
        let down = Linear::new(store, &format!("{name}.w2"), topo_dim, hidden, rng);
        let up = Linear::new(store, &format!("{name}.w1"), hidden, channels, rng);
        Self { down, up, ratio }
    }

    pub fn channels(&self) -> usize {
        self.up.out_dim
    }

    pub fn forward(&self, store: &ParamStore, t: &Tensor) -> Result<(Tensor, GateCache), NnError> {
        let down_pre = self.down.forward(store, t)?;
        let hidden = relu_forward(&down_pre);
        let out = sigmoid_forward(&self.up.forward(store, &hidden)?);
        let cache = GateCache { t: t.clone(), down_pre, hidden, out: out.clone() };
        Ok((out, cache))
    }

    /// Returns the gradient with respect to `t`.
    pub fn backward(
        &self,
        store: &ParamStore,
        cache: &GateCache,
        dout: &Tensor,
        grads: &mut Gradients,
    ) -> Result<Tensor, NnError> {
        let dup = sigmoid_backward(&cache.out, dout)?;
        let dhidden = self.up.backward(store, &cache.hidden, &dup, grads)?;
        let ddown = relu_backward(&cache.down_pre, &dhidden)?;
        self.down.backward(store, &cache.t, &ddown, grads)
    }
}

/// `F'[h, w, c] = F[h, w, c] * gate[c]`.
pub fn refine(features: &Tensor, gate: &Tensor) -> Result<Tensor, NnError> {
    channel_scale_forward(features, gate)
}

/// Returns `(dF, d gate)`.
pub fn refine_backward(features: &Tensor, gate: &Tensor, dy: &Tensor) -> Result<(Tensor, Tensor), NnError> {
    channel_scale_backward(features, gate, dy)
}
