//! Parameter storage and the two parameterized layers.

use rand::Rng;

use crate::ops::{self, ConvGrads, LinearGrads};
use crate::{shape_err, NnError, Tensor};

/// Index of a parameter tensor inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

/// Named parameter tensors in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.names.push(name.into());
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    /// Total scalar count.
    pub fn num_values(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// Replaces all values with those of `other`, which must have the same
    /// names and shapes.
    pub fn load_from(&mut self, other: &ParamStore) -> Result<(), NnError> {
        if self.names != other.names {
            return Err(NnError::Checkpoint(format!(
                "parameter names differ: expected {:?}, found {:?}",
                self.names, other.names
            )));
        }
        for (mine, theirs) in self.values.iter_mut().zip(&other.values) {
            if mine.shape() != theirs.shape() {
                return Err(shape_err("load_from", format!("{:?} vs {:?}", mine.shape(), theirs.shape())));
            }
            *mine = theirs.clone();
        }
        Ok(())
    }
}

/// Gradient tensors mirroring a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    values: Vec<Tensor>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self { values: store.values.iter().map(|t| Tensor::zeros(t.shape())).collect() }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn accumulate(&mut self, id: ParamId, grad: &Tensor) -> Result<(), NnError> {
        self.values[id.0].add_assign(grad)
    }

    /// Adds `other` elementwise; used to reduce per-sample gradients in a
    /// fixed order.
    pub fn merge(&mut self, other: &Gradients) -> Result<(), NnError> {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|t| t.scale(s));
    }

    pub fn zero(&mut self, id: ParamId) {
        self.values[id.0].data_mut().fill(0.0);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        self.values.iter()
    }
}

/// Glorot uniform: `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng>(rng: &mut R, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-a..=a)).collect()).expect("shape product")
}

/// Fully connected layer acting on the last axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let weight = store.add(format!("{name}.weight"), glorot_uniform(rng, &[out_dim, in_dim], in_dim, out_dim));
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(&[out_dim]));
        Self { weight, bias, in_dim, out_dim }
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<Tensor, NnError> {
        ops::linear_forward(x, store.get(self.weight), store.get(self.bias))
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(
        &self,
        store: &ParamStore,
        x: &Tensor,
        dy: &Tensor,
        grads: &mut Gradients,
    ) -> Result<Tensor, NnError> {
        let LinearGrads { dx, dweight, dbias } = ops::linear_backward(x, store.get(self.weight), dy)?;
        grads.accumulate(self.weight, &dweight)?;
        grads.accumulate(self.bias, &dbias)?;
        Ok(dx)
    }

    pub fn params(&self) -> [ParamId; 2] {
        [self.weight, self.bias]
    }
}

/// 3x3 same-padding convolution on `[h, w, c]` maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conv2d {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl Conv2d {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        rng: &mut R,
    ) -> Self {
        let (fan_in, fan_out) = (9 * in_channels, 9 * out_channels);
        let weight = store.add(
            format!("{name}.weight"),
            glorot_uniform(rng, &[out_channels, 3, 3, in_channels], fan_in, fan_out),
        );
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(&[out_channels]));
        Self { weight, bias, in_channels, out_channels }
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<Tensor, NnError> {
        ops::conv3x3_forward(x, store.get(self.weight), store.get(self.bias))
    }

    pub fn backward(
        &self,
        store: &ParamStore,
        x: &Tensor,
        dy: &Tensor,
        grads: &mut Gradients,
    ) -> Result<Tensor, NnError> {
        let ConvGrads { dx, dweight, dbias } = ops::conv3x3_backward(x, store.get(self.weight), dy)?;
        grads.accumulate(self.weight, &dweight)?;
        grads.accumulate(self.bias, &dbias)?;
        Ok(dx)
    }

    pub fn params(&self) -> [ParamId; 2] {
        [self.weight, self.bias]
    }
}
