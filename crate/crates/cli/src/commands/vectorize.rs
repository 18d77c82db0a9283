use std::path::PathBuf;
use std::process::ExitCode;

use phg_core::diagram::{finitize, read_diagram, HomDim, PersistenceDiagram, PersistencePoint};
use phg_core::vectorize::{
    betti_curve, landscapes, persistence_image, silhouette, PersistenceImageSpec, SampleGrid, SampledCurve,
};
use serde::Serialize;

use crate::{write, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Betti,
    Landscape,
    Silhouette,
    Pimage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DimSelection {
    All,
    H0,
    H1,
}

impl DimSelection {
    fn dims(self) -> &'static [HomDim] {
        match self {
            DimSelection::All => &HomDim::ALL,
            DimSelection::H0 => &[HomDim::H0],
            DimSelection::H1 => &[HomDim::H1],
        }
    }
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct VectorizeArgs {
    /// Diagram JSON
    #[arg(long)]
    pub diagram: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Output CSV
    #[arg(long)]
    pub out: PathBuf,
    /// Coordinates are divided by this before vectorizing; infinite deaths
    /// are first replaced by it
    #[arg(long, default_value_t = 255.0)]
    pub intensity_max: f64,
    /// Number of uniform samples on [t-min, t-max]
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Start of the sample range; persistence images span births in
    /// [t-min, t-max] and persistence in [0, t-max - t-min]
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub t_max: f64,
    /// Explicit comma-separated sample points, overriding the uniform grid
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub t_values: Option<Vec<f64>>,
    /// Landscape levels 1..=levels
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    /// Silhouette weight power
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    /// Persistence image rows and columns
    #[arg(long, default_value_t = 16)]
    pub resolution: usize,
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = DimSelection::All)]
    pub dim: DimSelection,
}

fn scaled(diag: &PersistenceDiagram, intensity_max: f64) -> Result<PersistenceDiagram> {
    if !(intensity_max > 0.0 && intensity_max.is_finite()) {
        return Err(CliError::Config(format!("--intensity-max must be positive, got {intensity_max}")));
    }
    let diag = if diag.is_finite() { diag.clone() } else { finitize(diag, intensity_max)? };
    let points = diag
        .points()
        .iter()
        .map(|p| PersistencePoint { birth: p.birth / intensity_max, death: p.death / intensity_max, ..*p })
        .collect();
    Ok(PersistenceDiagram::new(points)?)
}

/// Shortest round-trip form, switching to exponent notation for tiny and
/// huge magnitudes.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

/// CSV text of the requested vectorization. Curve outputs have a `t`
/// column followed by one column per group and level; persistence images
/// are written in long form, one pixel per row.
pub fn vectorize_csv(diag: &PersistenceDiagram, args: &VectorizeArgs) -> Result<String> {
    let diag = scaled(diag, args.intensity_max)?;
    let dims = args.dim.dims();
    if args.method == Method::Pimage {
        let spec = PersistenceImageSpec {
            rows: args.resolution,
            cols: args.resolution,
            birth_range: (args.t_min, args.t_max),
            persistence_range: (0.0, args.t_max - args.t_min),
            sigma: args.sigma,
        };
        let mut out = format!("dim,persistence,birth,pimage_sigma{}_res{}\n", fmt(args.sigma), args.resolution);
        for &dim in dims {
            let img = persistence_image(&diag.restrict(dim), &spec)?;
            for i in 0..spec.rows {
                for j in 0..spec.cols {
                    out.push_str(&format!(
                        "{dim},{},{},{}\n",
                        fmt(spec.persistence_center(i)),
                        fmt(spec.birth_center(j)),
                        fmt(img.get(i, j))
                    ));
                }
            }
        }
        return Ok(out);
    }

    let grid = match &args.t_values {
        Some(v) => SampleGrid::new(v.clone())?,
        None => SampleGrid::uniform(args.t_min, args.t_max, args.samples)?,
    };
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for &dim in dims {
        let d = diag.restrict(dim);
        let tag = dim.to_string().to_lowercase();
        let curve: SampledCurve = match args.method {
            Method::Betti => betti_curve(&d, &grid)?,
            Method::Landscape => landscapes(&d, args.levels, &grid)?,
            Method::Silhouette => silhouette(&d, args.power, &grid)?,
            Method::Pimage => unreachable!(),
        };
        for (k, level) in curve.levels.into_iter().enumerate() {
            let name = match args.method {
                Method::Betti => format!("betti_{tag}"),
                Method::Landscape => format!("landscape_k{}_{tag}", k + 1),
                _ => format!("silhouette_p{}_{tag}", fmt(args.power)),
            };
            columns.push((name, level));
        }
    }
    let mut out = String::from("t");
    for (name, _) in &columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, t) in grid.points().iter().enumerate() {
        out.push_str(&fmt(*t));
        for (_, values) in &columns {
            out.push(',');
            out.push_str(&fmt(values[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn run(args: &VectorizeArgs) -> Result<ExitCode> {
    let diag = read_diagram(&args.diagram)
        .map_err(|e| CliError::Input { path: args.diagram.clone(), message: e.to_string() })?;
    write(&args.out, vectorize_csv(&diag, args)?)?;
    Ok(ExitCode::SUCCESS)
}
