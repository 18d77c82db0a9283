use std::path::{Path, PathBuf};
use std::process::ExitCode;

use phg_core::cubical::persistence_diagram;
use phg_core::diagram::{NormalizationStats, PersistenceDiagram, PreprocessConfig};
use phg_model::data::{build_dataset, dataset_hash, Dataset, Split, TopoEncoding};
use phg_model::train::{evaluate, train, RunManifest};
use phg_model::{ModelConfig, PhgModel, TrainConfig, Variant};
use phg_tinynn::checkpoint::Checkpoint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_manifest, load_split, read_labels};
use crate::{read_to_string, write, CliError, Result};

pub const CHECKPOINT_STEM: &str = "model";
pub const RUN_MANIFEST: &str = "manifest.json";
pub const HISTORY: &str = "history.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    Phg,
    Vision,
    Concat,
    TopoOnly,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Phg => Variant::Phg,
            VariantArg::Vision => Variant::Vision,
            VariantArg::Concat => Variant::Concat,
            VariantArg::TopoOnly => Variant::TopoOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingArg {
    Points,
    Silhouette,
    Landscape,
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct TrainArgs {
    /// Dataset directory written by `gen`
    #[arg(long)]
    pub data: PathBuf,
    /// Run directory for checkpoint, manifest, history and diagram cache
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Phg)]
    pub variant: VariantArg,
    /// Input of the topological branch
    #[arg(long, value_enum, default_value_t = EncodingArg::Points)]
    pub encoding: EncodingArg,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Weight of the topological loss
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gate reduction ratio
    #[arg(long, default_value_t = 8)]
    pub ratio: usize,
    /// One encoder per convolutional block instead of a shared one
    #[arg(long)]
    pub no_share: bool,
    #[arg(long, default_value_t = 64)]
    pub topo_dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "16,32")]
    pub channels: Vec<usize>,
    #[arg(long, default_value_t = 150)]
    pub n_per_group: usize,
    #[arg(long, default_value_t = 10.0)]
    pub min_pers: f64,
    #[arg(long, default_value_t = 0.0)]
    pub weight_decay: f64,
    /// Disable random horizontal flips
    #[arg(long)]
    pub no_flip: bool,
    /// Gates output 1 and are not trained
    #[arg(long)]
    pub freeze_gates: bool,
    /// Samples per curve for vector encodings
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Landscape levels for the landscape encoding
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    /// Silhouette weight power
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
}

/// Settings needed to rebuild inputs at evaluation time; stored in the
/// checkpoint metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub dataset_hash: String,
    pub preprocess: PreprocessConfig,
    pub encoding: TopoEncoding,
    pub stats: NormalizationStats,
}

impl TrainArgs {
    pub fn preprocess(&self) -> PreprocessConfig {
        PreprocessConfig { min_persistence: self.min_pers, n_per_group: self.n_per_group, ..PreprocessConfig::default() }
    }

    pub fn encoding(&self) -> TopoEncoding {
        match self.encoding {
            EncodingArg::Points => TopoEncoding::Points,
            EncodingArg::Silhouette => TopoEncoding::Silhouette { p: self.power, samples: self.samples },
            EncodingArg::Landscape => TopoEncoding::Landscape { levels: self.levels, samples: self.samples },
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let channels: [usize; 2] = self
            .channels
            .clone()
            .try_into()
            .map_err(|_| CliError::Config("--channels takes exactly two widths".into()))?;
        Ok(TrainConfig {
            model: ModelConfig {
                variant: self.variant.into(),
                topo_input: self.encoding().model_input(),
                channels,
                topo_dim: self.topo_dim,
                ratio: self.ratio,
                share_encoder: !self.no_share,
                freeze_gates: self.freeze_gates,
                ..ModelConfig::default()
            },
            alpha: self.alpha,
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            weight_decay: self.weight_decay,
            flip_augment: !self.no_flip,
            ..TrainConfig::default()
        })
    }
}

/// Raw diagrams of a split, cached under `<run>/diagrams/<hash prefix>/`.
pub fn cached_diagrams(run: &Path, data: &Path, split_name: &str, split: &Split) -> Result<Vec<PersistenceDiagram>> {
    let hash = dataset_hash(&split.images, &split.labels);
    let dir = run.join("diagrams").join(&hash[..16]);
    let names = read_labels(&data.join(split_name))?;
    names
        .par_iter()
        .zip(&split.images)
        .map(|((file, _), img)| {
            let stem = Path::new(file).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let path = dir.join(format!("{stem}.json"));
            if path.is_file() {
                let text = read_to_string(&path)?;
                return PersistenceDiagram::from_json(text.as_bytes())
                    .map_err(|e| CliError::Input { path, message: e.to_string() });
            }
            let diag = persistence_diagram(img);
            write(&path, diag.to_json())?;
            Ok(diag)
        })
        .collect()
}

fn prepare(
    run: &Path,
    data: &Path,
    split_name: &str,
    pre: &PreprocessConfig,
    stats: Option<NormalizationStats>,
    encoding: &TopoEncoding,
) -> Result<(Dataset, NormalizationStats, String)> {
    let manifest = load_manifest(data)?;
    let split = load_split(data, split_name)?;
    let cleaned = cached_diagrams(run, data, split_name, &split)?
        .iter()
        .map(|d| pre.clean(d))
        .collect::<Result<Vec<_>, _>>()?;
    let stats = match stats {
        Some(s) => s,
        None => NormalizationStats::fit(&cleaned, pre.intensity_max)?,
    };
    let dataset =
        build_dataset(&split.images, &split.labels, &cleaned, manifest.num_classes(), pre, &stats, encoding)?;
    Ok((dataset, stats, dataset_hash(&split.images, &split.labels)))
}

pub fn run_train(args: &TrainArgs) -> Result<ExitCode> {
    let config = args.train_config()?;
    config.validate()?;
    let pre = args.preprocess();
    let encoding = args.encoding();
    let (dataset, stats, hash) = prepare(&args.out, &args.data, "train", &pre, None, &encoding)?;
    let (model, history) = train(&dataset, &config)?;
    for e in &history.epochs {
        eprintln!(
            "epoch {:>3}  lr {:.3e}  loss {:.4}  vision {:.4}  topo {:.4}  acc {:.4}",
            e.epoch, e.lr, e.loss, e.vision_loss, e.topo_loss, e.train_accuracy
        );
    }
    let meta = RunMeta { seed: config.seed, dataset_hash: hash.clone(), preprocess: pre, encoding, stats };
    model
        .to_checkpoint(serde_json::to_value(&meta).expect("meta serializes"))
        .save(&args.out, CHECKPOINT_STEM)?;
    let manifest = RunManifest {
        config,
        seed: args.seed,
        dataset_hash: hash,
        num_classes: dataset.num_classes,
        train_samples: dataset.samples.len(),
        preprocess: pre,
        encoding,
        stats,
        history: history.clone(),
    };
    write(&args.out.join(RUN_MANIFEST), format!("{}\n", manifest.to_json()))?;
    let mut csv = String::from("epoch,lr,loss,vision_loss,topo_loss,train_accuracy\n");
    for e in &history.epochs {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.epoch, e.lr, e.loss, e.vision_loss, e.topo_loss, e.train_accuracy
        ));
    }
    write(&args.out.join(HISTORY), csv)?;
    println!("wrote {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct EvalArgs {
    /// Run directory written by `train`
    #[arg(long)]
    pub run: PathBuf,
    /// Dataset directory written by `gen`
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Also write the metrics as JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn load_run(run: &Path) -> Result<(PhgModel, RunMeta)> {
    let (manifest, _) = Checkpoint::paths(run, CHECKPOINT_STEM);
    if !manifest.is_file() {
        return Err(CliError::Config(format!("missing checkpoint {}", manifest.display())));
    }
    let ck = Checkpoint::load(run, CHECKPOINT_STEM)?;
    let meta: RunMeta = serde_json::from_value(ck.meta["run"].clone())
        .map_err(|e| CliError::Config(format!("checkpoint lacks preprocessing settings or statistics: {e}")))?;
    Ok((PhgModel::from_checkpoint(&ck)?, meta))
}

pub fn run_eval(args: &EvalArgs) -> Result<ExitCode> {
    let (model, meta) = load_run(&args.run)?;
    let (dataset, _, _) = prepare(&args.run, &args.data, &args.split, &meta.preprocess, Some(meta.stats), &meta.encoding)?;
    let m = evaluate(&model, &dataset)?;
    println!("split {} ({} samples)", args.split, m.samples);
    println!("{:<8} {:>8} {:>8} {:>8} {:>8}", "class", "AUC", "Sen", "Spe", "support");
    for c in &m.per_class {
        println!("{:<8} {:>8.4} {:>8.4} {:>8.4} {:>8}", c.class, c.auc, c.sensitivity, c.specificity, c.support);
    }
    println!("{:<8} {:>8.4} {:>8.4} {:>8.4}", "mean", m.auc, m.sensitivity, m.specificity);
    println!("Acc {:.4}", m.accuracy);
    if let Some(out) = &args.out {
        write(out, format!("{}\n", serde_json::to_string_pretty(&m).expect("metrics serialize")))?;
    }
    Ok(ExitCode::SUCCESS)
}
