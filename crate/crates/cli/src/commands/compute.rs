use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use phg_core::cubical::persistence_diagram;
use phg_core::diagram::{filter_persistence, finitize, PersistenceDiagram};
use phg_core::grid::{load_csv_grid, load_pgm, GrayscaleGrid};
use rayon::prelude::*;
use serde::Serialize;

use crate::{io_err, write, CliError, Result};

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct ComputeArgs {
    /// Image (.pgm or .csv) or a directory of images
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory; one `<stem>.json` per image
    #[arg(long)]
    pub out: PathBuf,
    /// Drop points with death - birth below this, in raw intensity units
    #[arg(long, default_value_t = 10.0)]
    pub min_pers: f64,
    /// Value replacing infinite deaths
    #[arg(long, default_value_t = 255.0)]
    pub finitize: f64,
    /// Keep infinite deaths instead of finitizing
    #[arg(long)]
    pub keep_infinite: bool,
}

pub fn is_image(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("pgm" | "csv"))
}

pub fn load_image(path: &Path) -> Result<GrayscaleGrid> {
    let grid = match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => load_pgm(path),
        Some("csv") => load_csv_grid(path),
        _ => return Err(CliError::Input { path: path.into(), message: "expected a .pgm or .csv image".into() }),
    };
    grid.map_err(|e| CliError::Input { path: path.into(), message: e.to_string() })
}

/// Image files directly inside `dir`, sorted by name. A dataset's label
/// table is not an image and is skipped.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let is_labels = path.file_name().is_some_and(|n| n == crate::dataset::LABELS);
        if path.is_file() && is_image(&path) && !is_labels {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn diagram_of(grid: &GrayscaleGrid, args: &ComputeArgs) -> Result<PersistenceDiagram> {
    let raw = persistence_diagram(grid);
    let diag = if args.keep_infinite { raw } else { finitize(&raw, args.finitize)? };
    Ok(filter_persistence(&diag, args.min_pers))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn run(args: &ComputeArgs) -> Result<ExitCode> {
    if !(args.min_pers >= 0.0) || !args.finitize.is_finite() {
        return Err(CliError::Config("--min-pers must be >= 0 and --finitize finite".into()));
    }
    let files = if args.input.is_dir() { list_images(&args.input)? } else { vec![args.input.clone()] };
    let mut stems = BTreeSet::new();
    for f in &files {
        if !stems.insert(stem(f)) {
            return Err(CliError::Config(format!("two inputs share the output name {}.json", stem(f))));
        }
    }
    std::fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let results: Vec<Result<()>> = files
        .par_iter()
        .map(|f| {
            let diag = diagram_of(&load_image(f)?, args)?;
            write(&args.out.join(format!("{}.json", stem(f))), diag.to_json())
        })
        .collect();
    let mut failed = 0;
    for r in results {
        if let Err(e) = r {
            eprintln!("error: {e}");
            failed += 1;
        }
    }
    eprintln!("computed {} diagrams, {failed} failed", files.len() - failed);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
