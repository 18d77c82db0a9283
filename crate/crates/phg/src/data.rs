//! Turning labelled images into training samples: cached persistence
//! diagrams, normalization statistics and the topological side input.

use phg_core::cubical::persistence_diagram;
use phg_core::diagram::{HomDim, NormalizationStats, PersistenceDiagram, PersistencePoint, PreprocessConfig};
use phg_core::grid::GrayscaleGrid;
use phg_core::vectorize::{landscapes, silhouette, SampleGrid};
use phg_tinynn::Tensor;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{TopoFeatures, TopoInput};
use crate::{config_err, PhgError};

/// Representation handed to the topological branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TopoEncoding {
    /// Normalized point-feature matrix for the learned encoder.
    Points,
    /// Silhouette of each homology group on `samples` points of [0, 1].
    Silhouette { p: f64, samples: usize },
    /// Landscape levels `1..=levels` of each group, concatenated.
    Landscape { levels: usize, samples: usize },
}

impl TopoEncoding {
    pub fn model_input(&self) -> TopoInput {
        match *self {
            TopoEncoding::Points => TopoInput::Points,
            TopoEncoding::Silhouette { samples, .. } => TopoInput::Vector { dim: 2 * samples },
            TopoEncoding::Landscape { levels, samples } => TopoInput::Vector { dim: 2 * levels * samples },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Tensor,
    pub topo: TopoFeatures,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Errors unless the set is non-empty and every class occurs.
    pub fn check(&self) -> Result<(), PhgError> {
        if self.samples.is_empty() {
            return Err(config_err("dataset is empty"));
        }
        for c in 0..self.num_classes {
            if !self.samples.iter().any(|s| s.label == c) {
                return Err(config_err(format!("class {c} is absent from the dataset")));
            }
        }
        if let Some(s) = self.samples.iter().find(|s| s.label >= self.num_classes) {
            return Err(config_err(format!("label {} out of range", s.label)));
        }
        Ok(())
    }
}

/// `[h, w, 1]` tensor of intensities divided by `intensity_max`.
pub fn image_tensor(grid: &GrayscaleGrid, intensity_max: f64) -> Tensor {
    let (h, w) = (grid.height(), grid.width());
    let data = (0..h).flat_map(|r| (0..w).map(move |c| grid.get(r, c) / intensity_max)).collect();
    Tensor::from_vec(&[h, w, 1], data).expect("grid dimensions")
}

/// Mirrors an `[h, w, c]` tensor left to right.
pub fn flip_tensor(x: &Tensor) -> Tensor {
    let (w, c) = (x.shape()[1], x.shape()[2]);
    let mut out = Vec::with_capacity(x.len());
    for row in x.data().chunks_exact(w * c) {
        for px in row.chunks_exact(c).rev() {
            out.extend_from_slice(px);
        }
    }
    Tensor::from_vec(x.shape(), out).expect("same shape")
}

/// Diagrams of every image, finitized and filtered. Parallel over images.
pub fn clean_diagrams(images: &[GrayscaleGrid], pre: &PreprocessConfig) -> Result<Vec<PersistenceDiagram>, PhgError> {
    images
        .par_iter()
        .map(|img| Ok(pre.clean(&persistence_diagram(img))?))
        .collect()
}

fn scaled(diag: &PersistenceDiagram, intensity_max: f64) -> Result<PersistenceDiagram, PhgError> {
    let points = diag
        .points()
        .iter()
        .map(|p| PersistencePoint { birth: p.birth / intensity_max, death: p.death / intensity_max, ..*p })
        .collect();
    Ok(PersistenceDiagram::new(points)?)
}

/// Side input for one cleaned diagram.
pub fn topo_features(
    cleaned: &PersistenceDiagram,
    pre: &PreprocessConfig,
    stats: &NormalizationStats,
    encoding: &TopoEncoding,
) -> Result<TopoFeatures, PhgError> {
    let vector = |samples: usize, f: &dyn Fn(&PersistenceDiagram, &SampleGrid) -> Result<Vec<f64>, PhgError>| {
        let grid = SampleGrid::uniform(0.0, 1.0, samples)?;
        let unit = scaled(cleaned, pre.intensity_max)?;
        let mut v = Vec::new();
        for dim in HomDim::ALL {
            v.extend(f(&unit.restrict(dim), &grid)?);
        }
        Ok(TopoFeatures::Vector(v))
    };
    match *encoding {
        TopoEncoding::Points => Ok(TopoFeatures::Points(pre.features(cleaned, stats)?)),
        TopoEncoding::Silhouette { p, samples } => {
            vector(samples, &|d, g| Ok(silhouette(d, p, g)?.flatten()))
        }
        TopoEncoding::Landscape { levels, samples } => {
            vector(samples, &|d, g| Ok(landscapes(d, levels, g)?.flatten()))
        }
    }
}

pub fn build_dataset(
    images: &[GrayscaleGrid],
    labels: &[usize],
    cleaned: &[PersistenceDiagram],
    num_classes: usize,
    pre: &PreprocessConfig,
    stats: &NormalizationStats,
    encoding: &TopoEncoding,
) -> Result<Dataset, PhgError> {
    if images.len() != labels.len() || images.len() != cleaned.len() {
        return Err(config_err("images, labels and diagrams differ in length"));
    }
    let samples = images
        .par_iter()
        .zip(labels)
        .zip(cleaned)
        .map(|((img, &label), diag)| {
            Ok(Sample {
                image: image_tensor(img, pre.intensity_max),
                topo: topo_features(diag, pre, stats, encoding)?,
                label,
            })
        })
        .collect::<Result<Vec<_>, PhgError>>()?;
    let dataset = Dataset { samples, num_classes };
    dataset.check()?;
    Ok(dataset)
}

/// Labelled images of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub images: Vec<GrayscaleGrid>,
    pub labels: Vec<usize>,
}

pub struct PreparedSplits {
    pub train: Dataset,
    pub test: Dataset,
    pub stats: NormalizationStats,
    pub train_hash: String,
    pub test_hash: String,
}

/// Computes diagrams for both splits, fits statistics on the training
/// split only, and builds both datasets.
pub fn prepare_splits(
    train: &Split,
    test: &Split,
    num_classes: usize,
    pre: &PreprocessConfig,
    encoding: &TopoEncoding,
) -> Result<PreparedSplits, PhgError> {
    let train_diags = clean_diagrams(&train.images, pre)?;
    let test_diags = clean_diagrams(&test.images, pre)?;
    let stats = NormalizationStats::fit(&train_diags, pre.intensity_max)?;
    Ok(PreparedSplits {
        train: build_dataset(&train.images, &train.labels, &train_diags, num_classes, pre, &stats, encoding)?,
        test: build_dataset(&test.images, &test.labels, &test_diags, num_classes, pre, &stats, encoding)?,
        stats,
        train_hash: dataset_hash(&train.images, &train.labels),
        test_hash: dataset_hash(&test.images, &test.labels),
    })
}

/// SHA-256 over dimensions, pixel bits and labels, hex encoded.
pub fn dataset_hash(images: &[GrayscaleGrid], labels: &[usize]) -> String {
    let mut h = Sha256::new();
    h.update((images.len() as u64).to_le_bytes());
    for (img, &label) in images.iter().zip(labels) {
        h.update((img.height() as u64).to_le_bytes());
        h.update((img.width() as u64).to_le_bytes());
        for r in 0..img.height() {
            for c in 0..img.width() {
                h.update(img.get(r, c).to_bits().to_le_bytes());
            }
        }
        h.update((label as u64).to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
