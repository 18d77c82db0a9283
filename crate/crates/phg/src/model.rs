//! The fused classifier: a two-block convolutional stub whose feature maps
//! are refined by gates driven from the encoded persistence diagram, plus a
//! topological head reading the encoding directly.

use phg_core::diagram::{PointFeatureMatrix, FEATURE_WIDTH};
use phg_tinynn::checkpoint::Checkpoint;
use phg_tinynn::gradcheck::{central_difference, compare, Report};
use phg_tinynn::ops::{
    avg_pool2_backward, avg_pool2_forward, global_avg_pool_backward, global_avg_pool_forward, relu_backward,
    relu_forward, softmax, softmax_cross_entropy,
};
use phg_tinynn::{Conv2d, Gradients, Linear, NnError, ParamStore, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderCache, PdEncoder};
use crate::gate::{refine, refine_backward, Gate, GateCache};
use crate::{config_err, PhgError};

/// Which parts of the network are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// The convolutional stub alone.
    Vision,
    /// Stub with diagram-driven gates after each block, plus the topo head.
    Phg,
    /// Stub whose pooled features are concatenated with the encoding.
    Concat,
    /// Diagram encoder and topo head only; predictions come from the topo head.
    TopoOnly,
}

/// How the topological vector `t` is obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TopoInput {
    /// Learned set encoder over the point-feature matrix.
    Points,
    /// One fully connected layer over a fixed diagram vectorization of
    /// length `dim`.
    Vector { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub topo_input: TopoInput,
    pub in_channels: usize,
    /// Channel widths of the two convolutional blocks.
    pub channels: [usize; 2],
    /// Dimension `M` of the topological vector.
    pub topo_dim: usize,
    pub encoder_hidden: Vec<usize>,
    /// Gate reduction ratio `r`.
    pub ratio: usize,
    /// One encoder feeding every gate, or one encoder per block.
    pub share_encoder: bool,
    pub topo_hidden: usize,
    /// Gates output exactly 1 and are never updated.
    pub freeze_gates: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Phg,
            topo_input: TopoInput::Points,
            in_channels: 1,
            channels: [16, 32],
            topo_dim: 64,
            encoder_hidden: vec![64, 128],
            ratio: 8,
            share_encoder: true,
            topo_hidden: 32,
            freeze_gates: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), PhgError> {
        if self.in_channels == 0 || self.channels.contains(&0) {
            return Err(config_err("channel widths must be positive"));
        }
        if self.topo_dim == 0 || self.topo_hidden == 0 || self.encoder_hidden.contains(&0) {
            return Err(config_err("topological widths must be positive"));
        }
        if self.ratio == 0 {
            return Err(config_err("gate ratio must be positive"));
        }
        if let TopoInput::Vector { dim: 0 } = self.topo_input {
            return Err(config_err("vector input needs a positive dimension"));
        }
        Ok(())
    }

    pub fn uses_vision(&self) -> bool {
        self.variant != Variant::TopoOnly
    }

    pub fn uses_topo(&self) -> bool {
        self.variant != Variant::Vision
    }

    fn encoder_count(&self) -> usize {
        match self.variant {
            Variant::Vision => 0,
            Variant::Phg if !self.share_encoder => 2,
            _ => 1,
        }
    }
}

/// Topological side input of one sample.
#[derive(Debug, Clone, PartialEq)]
pub enum TopoFeatures {
    Points(PointFeatureMatrix),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
enum TopoEncoder {
    Points(PdEncoder),
    Vector(Linear),
}

enum TopoEncoderCache {
    Points(EncoderCache),
    Vector(Tensor),
}

impl TopoEncoder {
    fn forward(&self, store: &ParamStore, input: &TopoFeatures) -> Result<(Tensor, TopoEncoderCache), NnError> {
        match (self, input) {
            (TopoEncoder::Points(enc), TopoFeatures::Points(m)) => {
                let (t, cache) = enc.forward(store, m)?;
                Ok((t, TopoEncoderCache::Points(cache)))
            }
            (TopoEncoder::Vector(fc), TopoFeatures::Vector(v)) => {
                let x = Tensor::vector(v.clone());
                Ok((fc.forward(store, &x)?, TopoEncoderCache::Vector(x)))
            }
            _ => Err(NnError::Argument("topological input kind does not match the model".into())),
        }
    }

    fn backward(
        &self,
        store: &ParamStore,
        cache: &TopoEncoderCache,
        dt: &Tensor,
        grads: &mut Gradients,
    ) -> Result<(), NnError> {
        match (self, cache) {
            (TopoEncoder::Points(enc), TopoEncoderCache::Points(c)) => enc.backward(store, c, dt, grads),
            (TopoEncoder::Vector(fc), TopoEncoderCache::Vector(x)) => fc.backward(store, x, dt, grads).map(|_| ()),
            _ => unreachable!("cache built by the same encoder"),
        }
    }
}

/// Layer layout of a model; parameter values live in a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub config: ModelConfig,
    pub num_classes: usize,
    convs: Vec<Conv2d>,
    vision_head: Option<Linear>,
    encoders: Vec<TopoEncoder>,
    gates: Vec<Gate>,
    topo_head: Option<[Linear; 2]>,
}

/// Stream id for topological parameters, so the vision parameters drawn
/// from the seed are the same whatever the variant.
const TOPO_STREAM: u64 = 1;

impl Network {
    /// Builds the layout and initial parameters. Vision parameters are drawn
    /// first from stream 0 of the seed; everything topological comes from a
    /// separate stream.
    pub fn new(config: ModelConfig, num_classes: usize, seed: u64) -> Result<(Self, ParamStore), PhgError> {
        config.validate()?;
        if num_classes < 2 {
            return Err(config_err("need at least two classes"));
        }
        let mut store = ParamStore::new();
        let mut vrng = ChaCha8Rng::seed_from_u64(seed);
        let mut trng = ChaCha8Rng::seed_from_u64(seed);
        trng.set_stream(TOPO_STREAM);

        let [c1, c2] = config.channels;
        let mut convs = Vec::new();
        let mut vision_head = None;
        if config.uses_vision() {
            convs.push(Conv2d::new(&mut store, "conv1", config.in_channels, c1, &mut vrng));
            convs.push(Conv2d::new(&mut store, "conv2", c1, c2, &mut vrng));
            let head_in = if config.variant == Variant::Concat { c2 + config.topo_dim } else { c2 };
            vision_head = Some(Linear::new(&mut store, "vision_head", head_in, num_classes, &mut vrng));
        }

        let encoders = (0..config.encoder_count())
            .map(|i| {
                let name = format!("encoder{i}");
                match config.topo_input {
                    TopoInput::Points => TopoEncoder::Points(PdEncoder::new(
                        &mut store,
                        &name,
                        FEATURE_WIDTH,
                        &config.encoder_hidden,
                        config.topo_dim,
                        &mut trng,
                    )),
                    TopoInput::Vector { dim } => {
                        TopoEncoder::Vector(Linear::new(&mut store, &name, dim, config.topo_dim, &mut trng))
                    }
                }
            })
            .collect();
        let gates = if config.variant == Variant::Phg {
            (0..2)
                .map(|b| {
                    let name = format!("gate{}", b + 1);
                    Gate::new(&mut store, &name, config.topo_dim, config.channels[b], config.ratio, &mut trng)
                })
                .collect()
        } else {
            Vec::new()
        };
        let topo_head = config.uses_topo().then(|| {
            [
                Linear::new(&mut store, "topo_head.fc1", config.topo_dim, config.topo_hidden, &mut trng),
                Linear::new(&mut store, "topo_head.fc2", config.topo_hidden, num_classes, &mut trng),
            ]
        });
        let net = Self { config, num_classes, convs, vision_head, encoders, gates, topo_head };
        Ok((net, store))
    }

    /// Index of the encoder feeding the gate of `block`.
    fn encoder_for_block(&self, block: usize) -> usize {
        block.min(self.encoders.len() - 1)
    }
}

/// Everything retained by the forward pass for backpropagation.
pub struct Intermediates {
    topo: Vec<(Tensor, TopoEncoderCache)>,
    blocks: Vec<BlockCache>,
    pooled_shape: Vec<usize>,
    head_input: Option<Tensor>,
    topo_hidden_pre: Option<Tensor>,
    topo_hidden: Option<Tensor>,
}

struct BlockCache {
    input: Tensor,
    pre: Tensor,
    act: Tensor,
    gate: Option<(Tensor, GateCache)>,
    refined_shape: Vec<usize>,
}

impl Intermediates {
    /// The topological vectors, one per encoder.
    pub fn topo_vectors(&self) -> impl Iterator<Item = &Tensor> {
        self.topo.iter().map(|(t, _)| t)
    }

    /// Gate outputs of the two blocks, when gates are active.
    pub fn gate_outputs(&self) -> impl Iterator<Item = &Tensor> {
        self.blocks.iter().filter_map(|b| b.gate.as_ref().map(|(g, _)| g))
    }

    /// Activated (pre-refinement) feature maps of the two blocks.
    pub fn block_activations(&self) -> impl Iterator<Item = &Tensor> {
        self.blocks.iter().map(|b| &b.act)
    }
}

pub struct Output {
    pub logits_vision: Option<Tensor>,
    pub logits_topo: Option<Tensor>,
    pub intermediates: Intermediates,
}

impl Output {
    /// Logits used for prediction.
    pub fn logits(&self) -> &Tensor {
        self.logits_vision.as_ref().or(self.logits_topo.as_ref()).expect("some head is active")
    }
}

/// Per-sample loss components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub total: f64,
    pub vision: f64,
    pub topo: f64,
}

/// `CE(vision) + alpha * CE(topo)`.
pub fn total_loss(logits_vision: &Tensor, logits_topo: &Tensor, label: usize, alpha: f64) -> Result<f64, NnError> {
    let (v, _) = softmax_cross_entropy(logits_vision, label)?;
    let (t, _) = softmax_cross_entropy(logits_topo, label)?;
    Ok(v + alpha * t)
}

impl Network {
    pub fn forward(&self, store: &ParamStore, image: &Tensor, topo: Option<&TopoFeatures>) -> Result<Output, NnError> {
        let topo_out = if self.encoders.is_empty() {
            Vec::new()
        } else {
            let input = topo.ok_or_else(|| NnError::Argument("model needs topological input".into()))?;
            self.encoders.iter().map(|e| e.forward(store, input)).collect::<Result<Vec<_>, _>>()?
        };

        let mut blocks = Vec::new();
        let mut logits_vision = None;
        let mut head_input = None;
        let mut pooled_shape = Vec::new();
        if self.config.uses_vision() {
            if image.shape().len() != 3 || image.shape()[2] != self.config.in_channels {
                return Err(NnError::Shape {
                    op: "forward",
                    detail: format!("image {:?} for {} input channels", image.shape(), self.config.in_channels),
                });
            }
            let mut x = image.clone();
            for (b, conv) in self.convs.iter().enumerate() {
                let pre = conv.forward(store, &x)?;
                let act = relu_forward(&pre);
                let (refined, gate) = match self.gates.get(b) {
                    Some(_) if self.config.freeze_gates => (act.clone(), None),
                    Some(gate) => {
                        let t = &topo_out[self.encoder_for_block(b)].0;
                        let (g, cache) = gate.forward(store, t)?;
                        (refine(&act, &g)?, Some((g, cache)))
                    }
                    None => (act.clone(), None),
                };
                let pooled = avg_pool2_forward(&refined)?;
                let input = std::mem::replace(&mut x, pooled);
                blocks.push(BlockCache { input, pre, act, gate, refined_shape: refined.shape().to_vec() });
            }
            pooled_shape = x.shape().to_vec();
            let mut v = global_avg_pool_forward(&x)?.into_data();
            if self.config.variant == Variant::Concat {
                v.extend_from_slice(topo_out[0].0.data());
            }
            let v = Tensor::vector(v);
            let head = self.vision_head.as_ref().expect("vision head present");
            logits_vision = Some(head.forward(store, &v)?);
            head_input = Some(v);
        }

        let (mut logits_topo, mut topo_hidden_pre, mut topo_hidden) = (None, None, None);
        if let Some([fc1, fc2]) = &self.topo_head {
            let pre = fc1.forward(store, &topo_out[0].0)?;
            let hidden = relu_forward(&pre);
            logits_topo = Some(fc2.forward(store, &hidden)?);
            topo_hidden_pre = Some(pre);
            topo_hidden = Some(hidden);
        }

        Ok(Output {
            logits_vision,
            logits_topo,
            intermediates: Intermediates {
                topo: topo_out,
                blocks,
                pooled_shape,
                head_input,
                topo_hidden_pre,
                topo_hidden,
            },
        })
    }

    /// Training loss of one sample. The vision stub uses the vision loss
    /// only; the topo-only variant uses the topo loss with unit weight.
    pub fn loss(&self, out: &Output, label: usize, alpha: f64) -> Result<(LossParts, Option<Tensor>, Option<Tensor>), NnError> {
        let mut parts = LossParts::default();
        let mut dv = None;
        let mut dt = None;
        if let Some(lv) = &out.logits_vision {
            let (l, g) = softmax_cross_entropy(lv, label)?;
            parts.vision = l;
            parts.total += l;
            dv = Some(g);
        }
        if let Some(lt) = &out.logits_topo {
            let (l, mut g) = softmax_cross_entropy(lt, label)?;
            let weight = if self.config.variant == Variant::TopoOnly { 1.0 } else { alpha };
            parts.topo = l;
            parts.total += weight * l;
            g.scale(weight);
            dt = Some(g);
        }
        Ok((parts, dv, dt))
    }

    /// Accumulates parameter gradients for the given logit gradients.
    pub fn backward(
        &self,
        store: &ParamStore,
        inter: &Intermediates,
        dlogits_vision: Option<&Tensor>,
        dlogits_topo: Option<&Tensor>,
        grads: &mut Gradients,
    ) -> Result<(), NnError> {
        let mut dts: Vec<Tensor> = inter.topo.iter().map(|(t, _)| Tensor::zeros(t.shape())).collect();

        if let (Some(dl), Some([fc1, fc2])) = (dlogits_topo, &self.topo_head) {
            let hidden = inter.topo_hidden.as_ref().expect("topo head ran");
            let dh = fc2.backward(store, hidden, dl, grads)?;
            let dpre = relu_backward(inter.topo_hidden_pre.as_ref().expect("topo head ran"), &dh)?;
            let dt = fc1.backward(store, &inter.topo[0].0, &dpre, grads)?;
            dts[0].add_assign(&dt)?;
        }

        if let (Some(dl), Some(head)) = (dlogits_vision, &self.vision_head) {
            let v = inter.head_input.as_ref().expect("vision head ran");
            let dv = head.backward(store, v, dl, grads)?;
            let c2 = self.config.channels[1];
            if self.config.variant == Variant::Concat {
                dts[0].add_assign(&Tensor::vector(dv.data()[c2..].to_vec()))?;
            }
            let dgap = Tensor::vector(dv.data()[..c2].to_vec());
            let mut dx = global_avg_pool_backward(&inter.pooled_shape, &dgap)?;
            for b in (0..self.convs.len()).rev() {
                let block = &inter.blocks[b];
                let drefined = avg_pool2_backward(&block.refined_shape, &dx)?;
                let dact = match (&block.gate, self.gates.get(b)) {
                    (Some((g, cache)), Some(gate)) => {
                        let (dact, dg) = refine_backward(&block.act, g, &drefined)?;
                        let dt = gate.backward(store, cache, &dg, grads)?;
                        dts[self.encoder_for_block(b)].add_assign(&dt)?;
                        dact
                    }
                    _ => drefined,
                };
                let dpre = relu_backward(&block.pre, &dact)?;
                dx = self.convs[b].backward(store, &block.input, &dpre, grads)?;
            }
        }

        for ((enc, (_, cache)), dt) in self.encoders.iter().zip(&inter.topo).zip(&dts) {
            enc.backward(store, cache, dt, grads)?;
        }
        Ok(())
    }

    /// Forward plus backward for one labelled sample.
    pub fn sample_gradients(
        &self,
        store: &ParamStore,
        image: &Tensor,
        topo: Option<&TopoFeatures>,
        label: usize,
        alpha: f64,
        grads: &mut Gradients,
    ) -> Result<(LossParts, Vec<f64>), NnError> {
        let out = self.forward(store, image, topo)?;
        let (parts, dv, dt) = self.loss(&out, label, alpha)?;
        self.backward(store, &out.intermediates, dv.as_ref(), dt.as_ref(), grads)?;
        Ok((parts, softmax(out.logits().data())))
    }
}

/// A network together with its parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct PhgModel {
    pub net: Network,
    pub params: ParamStore,
}

impl PhgModel {
    pub fn new(config: ModelConfig, num_classes: usize, seed: u64) -> Result<Self, PhgError> {
        let (net, params) = Network::new(config, num_classes, seed)?;
        Ok(Self { net, params })
    }

    pub fn forward(&self, image: &Tensor, topo: Option<&TopoFeatures>) -> Result<Output, NnError> {
        self.net.forward(&self.params, image, topo)
    }

    /// Class probabilities from the prediction head.
    pub fn predict_proba(&self, image: &Tensor, topo: Option<&TopoFeatures>) -> Result<Vec<f64>, NnError> {
        Ok(softmax(self.forward(image, topo)?.logits().data()))
    }

    /// Checkpoint whose metadata records the architecture plus `extra`.
    pub fn to_checkpoint(&self, extra: serde_json::Value) -> Checkpoint {
        let meta = serde_json::json!({
            "model": self.net.config,
            "num_classes": self.net.num_classes,
            "run": extra,
        });
        Checkpoint { params: self.params.clone(), meta }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, PhgError> {
        let config: ModelConfig = serde_json::from_value(ck.meta["model"].clone())
            .map_err(|e| config_err(format!("checkpoint model config: {e}")))?;
        let num_classes = ck.meta["num_classes"]
            .as_u64()
            .ok_or_else(|| config_err("checkpoint lacks num_classes"))? as usize;
        let mut model = Self::new(config, num_classes, 0)?;
        model.params.load_from(&ck.params)?;
        Ok(model)
    }
}

/// Compares the analytic gradient of the per-sample training loss with
/// central finite differences over every parameter.
pub fn gradient_report(
    net: &Network,
    store: &ParamStore,
    image: &Tensor,
    topo: Option<&TopoFeatures>,
    label: usize,
    alpha: f64,
    step: f64,
) -> Result<Report, NnError> {
    let mut grads = Gradients::zeros_like(store);
    net.sample_gradients(store, image, topo, label, alpha, &mut grads)?;
    let analytic: Vec<f64> = grads.iter().flat_map(|g| g.data().iter().copied()).collect();
    let flat: Vec<f64> = store.iter().flat_map(|(_, t)| t.data().iter().copied()).collect();
    let mut probe = store.clone();
    let mut failure = None;
    let numeric = central_difference(&flat, step, |values| {
        let mut offset = 0;
        for id in store.ids() {
            let t = probe.get_mut(id);
            let n = t.len();
            t.data_mut().copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        match net.forward(&probe, image, topo).and_then(|out| net.loss(&out, label, alpha)) {
            Ok((parts, _, _)) => parts.total,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(compare(&analytic, &numeric))
}
