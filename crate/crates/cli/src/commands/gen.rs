use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use phg_core::grid::{generate_shapes, ShapeSpec};
use serde::Serialize;

use crate::dataset::{write_split, DatasetManifest, SplitInfo, MANIFEST};
use crate::{write, Result};

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct GenArgs {
    /// Output dataset directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 600)]
    pub train: usize,
    #[arg(long, default_value_t = 200)]
    pub test: usize,
    /// Image side length, at least 32
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Half-width of the uniform pixel noise
    #[arg(long, default_value_t = 15)]
    pub noise: u8,
}

/// Seed of the test split, decorrelated from the training seed.
pub fn test_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

pub fn run(args: &GenArgs) -> Result<ExitCode> {
    let spec = ShapeSpec { size: args.size, noise: args.noise, ..ShapeSpec::default() };
    let mut splits = BTreeMap::new();
    for (name, seed, count) in [("train", args.seed, args.train), ("test", test_seed(args.seed), args.test)] {
        let samples = generate_shapes(seed, count, &spec)?;
        let hash = write_split(&args.out.join(name), &samples)?;
        splits.insert(name.to_string(), SplitInfo { seed, count, hash });
    }
    let manifest = DatasetManifest {
        seed: args.seed,
        classes: spec.classes.iter().map(|c| c.name().to_string()).collect(),
        spec,
        splits,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&args.out.join(MANIFEST), format!("{json}\n"))?;
    for (name, info) in &manifest.splits {
        println!("{name}: {} images, sha256 {}", info.count, info.hash);
    }
    Ok(ExitCode::SUCCESS)
}
