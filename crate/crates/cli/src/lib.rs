//! `phg` command-line interface.
//!
//! Exit codes: 0 on success, 1 when any input or step fails, 2 for usage
//! errors (reported by the argument parser). Every command prints its
//! resolved configuration as JSON on stderr before doing any work. The
//! `PHG_THREADS` environment variable caps the worker threads used by
//! batch commands.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub mod commands;
pub mod dataset;
pub mod svg;

pub const THREADS_ENV: &str = "PHG_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Grid(#[from] phg_core::grid::GridError),
    #[error(transparent)]
    Diagram(#[from] phg_core::diagram::DiagramError),
    #[error(transparent)]
    Vectorize(#[from] phg_core::vectorize::VectorizeError),
    #[error(transparent)]
    Nn(#[from] phg_tinynn::NnError),
    #[error(transparent)]
    Model(#[from] phg_model::PhgError),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

pub(crate) fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}

#[derive(Debug, Parser)]
#[command(name = "phg", version, about = "Persistent-homology guided image classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Persistence diagrams of PGM or CSV images
    Compute(commands::compute::ComputeArgs),
    /// Betti curve, landscape, silhouette or persistence image of a diagram
    Vectorize(commands::vectorize::VectorizeArgs),
    /// Synthetic disk / annulus / two-disk dataset
    Gen(commands::gen::GenArgs),
    /// Train a classifier on a generated dataset
    Train(commands::train::TrainArgs),
    /// Evaluate a trained run on a dataset split
    Eval(commands::train::EvalArgs),
    /// Render diagrams, curves, histories or persistence images as SVG
    Plot(commands::plot::PlotArgs),
}

/// Thread count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_override() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn print_config(name: &str, args: &impl Serialize, threads: Option<usize>) {
    let config = serde_json::json!({
        "command": name,
        "args": args,
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
    });
    eprintln!("config: {config}");
}

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let threads = thread_override()?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?
    };
    pool.install(|| match &cli.command {
        Command::Compute(a) => {
            print_config("compute", a, threads);
            commands::compute::run(a)
        }
        Command::Vectorize(a) => {
            print_config("vectorize", a, threads);
            commands::vectorize::run(a)
        }
        Command::Gen(a) => {
            print_config("gen", a, threads);
            commands::gen::run(a)
        }
        Command::Train(a) => {
            print_config("train", a, threads);
            commands::train::run_train(a)
        }
        Command::Eval(a) => {
            print_config("eval", a, threads);
            commands::train::run_eval(a)
        }
        Command::Plot(a) => {
            print_config("plot", a, threads);
            commands::plot::run(a)
        }
    })
}
