//! Permutation-invariant persistence-diagram encoder.

use phg_core::diagram::PointFeatureMatrix;
use phg_tinynn::ops::{relu_backward, relu_forward, set_max_pool, set_max_pool_backward};
use phg_tinynn::{Gradients, Linear, NnError, ParamStore, Tensor};
use rand::Rng;

/// Per-point MLP `k -> hidden.. -> M` with ReLU between layers, then a
/// max-pool over the rows whose presence flag is set.
#[derive(Debug, Clone, PartialEq)]
pub struct PdEncoder {
    layers: Vec<Linear>,
}

#[derive(Debug, Clone)]
pub struct EncoderCache {
    /// Input of every layer; the first entry is the gathered point rows.
    inputs: Vec<Tensor>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Tensor>,
    argmax: Vec<Option<usize>>,
    rows: usize,
}

impl PdEncoder {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        hidden: &[usize],
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mut widths = vec![in_dim];
        widths.extend_from_slice(hidden);
        widths.push(out_dim);
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{name}.mlp{i}"), w[0], w[1], rng))
            .collect();
        Self { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").out_dim
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    /// Encodes a diagram to its `M`-vector. Padded rows never enter the MLP;
    /// an all-padding input yields the zero vector.
    pub fn forward(&self, store: &ParamStore, features: &PointFeatureMatrix) -> Result<(Tensor, EncoderCache), NnError> {
        if features.cols() != self.in_dim() {
            return Err(NnError::Shape {
                op: "encode_pd",
                detail: format!("{} feature columns, encoder expects {}", features.cols(), self.in_dim()),
            });
        }
        let mut gathered = Vec::new();
        let mut rows = 0;
        for i in 0..features.rows() {
            if features.is_present(i) {
                gathered.extend_from_slice(features.row(i));
                rows += 1;
            }
        }
        if rows == 0 {
            let cache = EncoderCache { inputs: Vec::new(), pre: Vec::new(), argmax: Vec::new(), rows };
            return Ok((Tensor::zeros(&[self.out_dim()]), cache));
        }
        let mut h = Tensor::from_vec(&[rows, self.in_dim()], gathered)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len() - 1);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let a = layer.forward(store, &h)?;
            inputs.push(h);
            h = if i < last {
                let r = relu_forward(&a);
                pre.push(a);
                r
            } else {
                a
            };
        }
        let (t, argmax) = set_max_pool(&h, &vec![true; rows])?;
        Ok((t, EncoderCache { inputs, pre, argmax, rows }))
    }

    pub fn backward(
        &self,
        store: &ParamStore,
        cache: &EncoderCache,
        dt: &Tensor,
        grads: &mut Gradients,
    ) -> Result<(), NnError> {
        if cache.rows == 0 {
            return Ok(());
        }
        let mut dh = set_max_pool_backward(&cache.argmax, cache.rows, dt)?;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let da = if i < self.layers.len() - 1 { relu_backward(&cache.pre[i], &dh)? } else { dh };
            dh = layer.backward(store, &cache.inputs[i], &da, grads)?;
        }
        Ok(())
    }
}

/// Standalone form of the encoder forward pass.
pub fn encode_pd(features: &PointFeatureMatrix, encoder: &PdEncoder, store: &ParamStore) -> Result<Tensor, NnError> {
    Ok(encoder.forward(store, features)?.0)
}
