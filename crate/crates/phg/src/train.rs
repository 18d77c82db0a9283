//! Mini-batch Adam training with polynomial learning-rate decay, evaluation
//! and run manifests.

use phg_core::diagram::{NormalizationStats, PreprocessConfig};
use phg_tinynn::optim::{poly_lr, Adam, AdamConfig};
use phg_tinynn::Gradients;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{flip_tensor, Dataset, TopoEncoding};
use crate::metrics::{argmax, compute_metrics, Metrics};
use crate::model::{LossParts, ModelConfig, PhgModel};
use crate::{config_err, PhgError};

/// Stream of the seed used for shuffling and augmentation.
const DATA_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    /// Weight of the topological loss.
    pub alpha: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub poly_power: f64,
    pub weight_decay: f64,
    /// Random horizontal flips. Diagrams are flip-invariant, so cached
    /// side inputs stay valid.
    pub flip_augment: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            alpha: 0.1,
            lr: 1e-4,
            epochs: 20,
            batch_size: 32,
            seed: 0,
            poly_power: 0.9,
            weight_decay: 0.0,
            flip_augment: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PhgError> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(config_err(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(config_err(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(config_err("epochs and batch size must be positive"));
        }
        if !(self.weight_decay >= 0.0) || !(self.poly_power >= 0.0) {
            return Err(config_err("weight decay and decay power must be >= 0"));
        }
        self.model.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Mean total loss over the epoch's samples.
    pub loss: f64,
    pub vision_loss: f64,
    pub topo_loss: f64,
    /// Accuracy of the predictions made during the epoch, before updates.
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

impl History {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }
}

/// Trains from the seed. Per-sample gradients within a batch may be
/// computed in parallel; they are summed in sample order, so results do not
/// depend on the thread count.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<(PhgModel, History), PhgError> {
    train_with(dataset, config, |_, _| {})
}

/// [`train`] with a callback after every optimizer step, given the step
/// index and the current model.
pub fn train_with(
    dataset: &Dataset,
    config: &TrainConfig,
    mut on_step: impl FnMut(usize, &PhgModel),
) -> Result<(PhgModel, History), PhgError> {
    config.validate()?;
    dataset.check()?;
    let mut model = PhgModel::new(config.model.clone(), dataset.num_classes, config.seed)?;
    let mut adam = Adam::new(
        &model.params,
        AdamConfig { lr: config.lr, weight_decay: config.weight_decay, ..AdamConfig::default() },
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(DATA_STREAM);
    let mut order: Vec<usize> = (0..dataset.samples.len()).collect();
    let mut history = History::default();
    let mut step = 0;
    for epoch in 0..config.epochs {
        let lr = poly_lr(config.lr, epoch, config.epochs, config.poly_power);
        adam.set_lr(lr);
        order.shuffle(&mut rng);
        let mut sums = LossParts::default();
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let flips: Vec<bool> = batch.iter().map(|_| config.flip_augment && rng.gen_bool(0.5)).collect();
            let results = batch
                .par_iter()
                .zip(&flips)
                .map(|(&i, &flip)| {
                    let sample = &dataset.samples[i];
                    let flipped;
                    let image = if flip {
                        flipped = flip_tensor(&sample.image);
                        &flipped
                    } else {
                        &sample.image
                    };
                    let mut grads = Gradients::zeros_like(&model.params);
                    let (parts, probs) = model.net.sample_gradients(
                        &model.params,
                        image,
                        Some(&sample.topo),
                        sample.label,
                        config.alpha,
                        &mut grads,
                    )?;
                    Ok((parts, argmax(&probs) == sample.label, grads))
                })
                .collect::<Result<Vec<_>, PhgError>>()?;
            let mut total = Gradients::zeros_like(&model.params);
            for (parts, hit, grads) in &results {
                total.merge(grads)?;
                sums.total += parts.total;
                sums.vision += parts.vision;
                sums.topo += parts.topo;
                correct += usize::from(*hit);
            }
            total.scale(1.0 / batch.len() as f64);
            adam.step(&mut model.params, &total)?;
            step += 1;
            on_step(step, &model);
        }
        let n = dataset.samples.len() as f64;
        history.epochs.push(EpochRecord {
            epoch,
            lr,
            loss: sums.total / n,
            vision_loss: sums.vision / n,
            topo_loss: sums.topo / n,
            train_accuracy: correct as f64 / n,
        });
    }
    Ok((model, history))
}

/// Class probabilities for every sample, in order.
pub fn predict(model: &PhgModel, dataset: &Dataset) -> Result<Vec<Vec<f64>>, PhgError> {
    dataset
        .samples
        .par_iter()
        .map(|s| Ok(model.predict_proba(&s.image, Some(&s.topo))?))
        .collect()
}

pub fn evaluate(model: &PhgModel, dataset: &Dataset) -> Result<Metrics, PhgError> {
    dataset.check()?;
    if dataset.num_classes != model.net.num_classes {
        return Err(config_err(format!(
            "dataset has {} classes, model {}",
            dataset.num_classes, model.net.num_classes
        )));
    }
    compute_metrics(&predict(model, dataset)?, &dataset.labels(), dataset.num_classes)
}

/// Everything needed to reproduce or audit a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: TrainConfig,
    pub seed: u64,
    pub dataset_hash: String,
    pub num_classes: usize,
    pub train_samples: usize,
    pub preprocess: PreprocessConfig,
    pub encoding: TopoEncoding,
    pub stats: NormalizationStats,
    pub history: History,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PhgError> {
        serde_json::from_str(text).map_err(|e| config_err(format!("run manifest: {e}")))
    }
}

/// Exponential moving average of a series.
pub fn ema(values: &[f64], decay: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = None;
    for &v in values {
        let next = match acc {
            None => v,
            Some(a) => decay * a + (1.0 - decay) * v,
        };
        acc = Some(next);
        out.push(next);
    }
    out
}
