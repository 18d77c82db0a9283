//! On-disk layout of generated datasets:
//!
//! ```text
//! <root>/manifest.json
//! <root>/<split>/labels.csv     file,label
//! <root>/<split>/000000.pgm ...
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use phg_core::grid::{ShapeSpec, SyntheticSample};
use phg_model::data::{dataset_hash, Split};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::compute::load_image;
use crate::{read_to_string, write, CliError, Result};

pub const MANIFEST: &str = "manifest.json";
pub const LABELS: &str = "labels.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub seed: u64,
    pub count: usize,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub spec: ShapeSpec,
    pub classes: Vec<String>,
    pub splits: BTreeMap<String, SplitInfo>,
}

impl DatasetManifest {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }
}

pub fn load_manifest(root: &Path) -> Result<DatasetManifest> {
    let path = root.join(MANIFEST);
    if !path.is_file() {
        return Err(CliError::Config(format!("{} is missing; is this a generated dataset?", path.display())));
    }
    serde_json::from_str(&read_to_string(&path)?)
        .map_err(|e| CliError::Input { path, message: e.to_string() })
}

/// Writes images and labels of one split; returns the split hash.
pub fn write_split(dir: &Path, samples: &[SyntheticSample]) -> Result<String> {
    let mut labels = String::from("file,label\n");
    for (i, s) in samples.iter().enumerate() {
        let name = format!("{i:06}.pgm");
        write(&dir.join(&name), s.image.to_pgm()?)?;
        labels.push_str(&format!("{name},{}\n", s.label));
    }
    write(&dir.join(LABELS), labels)?;
    let images: Vec<_> = samples.iter().map(|s| s.image.clone()).collect();
    let ys: Vec<usize> = samples.iter().map(|s| s.label).collect();
    Ok(dataset_hash(&images, &ys))
}

/// File names and labels listed in a split's `labels.csv`.
pub fn read_labels(dir: &Path) -> Result<Vec<(String, usize)>> {
    let path = dir.join(LABELS);
    let text = read_to_string(&path)?;
    let bad = |line: usize, msg: &str| CliError::Input { path: path.clone(), message: format!("line {line}: {msg}") };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "file,label")) => {}
        _ => return Err(bad(1, "expected header `file,label`")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let (file, label) = line.split_once(',').ok_or_else(|| bad(i + 1, "expected two fields"))?;
            if file.contains('/') || file.contains('\\') || file.starts_with('.') {
                return Err(bad(i + 1, "file names must be plain names inside the split"));
            }
            let label = label.trim().parse().map_err(|_| bad(i + 1, "label is not a class index"))?;
            Ok((file.to_string(), label))
        })
        .collect()
}

pub fn load_split(root: &Path, split: &str) -> Result<Split> {
    let dir = root.join(split);
    let entries = read_labels(&dir)?;
    let images = entries.par_iter().map(|(f, _)| load_image(&dir.join(f))).collect::<Result<Vec<_>>>()?;
    Ok(Split { images, labels: entries.into_iter().map(|(_, l)| l).collect() })
}
