use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use phg_core::diagram::read_diagram;
use serde::Serialize;

use crate::svg::{diagram_svg, heatmap_svg, lines_svg};
use crate::{read_to_string, write, CliError, Result};

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct PlotArgs {
    #[command(subcommand)]
    pub kind: PlotKind,
}

#[derive(Debug, Clone, clap::Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    /// Birth/death scatter of a diagram JSON
    Diagram {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Curves from a CSV whose first column is the x axis
    Curve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Loss curves from a run's history.csv
    History {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Persistence image CSV from `vectorize --method pimage`; one SVG per group
    Image {
        #[arg(long)]
        input: PathBuf,
        /// Output prefix; writes `<prefix>_h0.svg` and `<prefix>_h1.svg`
        #[arg(long)]
        out: PathBuf,
    },
}

fn title_of(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Header names and numeric columns of a CSV table.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read_to_string(path)?;
    let bad = |msg: String| CliError::Input { path: path.into(), message: msg };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> =
        lines.next().ok_or_else(|| bad("empty table".into()))?.split(',').map(|s| s.trim().to_string()).collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(bad(format!("row {} has {} cells, header has {}", i + 2, cells.len(), header.len())));
        }
        for (col, cell) in columns.iter_mut().zip(cells) {
            col.push(cell.trim().parse().map_err(|_| bad(format!("row {}: {cell:?} is not a number", i + 2)))?);
        }
    }
    Ok((header, columns))
}

fn curve(input: &Path, out: &Path, keep: impl Fn(&str) -> bool) -> Result<()> {
    let (header, columns) = read_table(input)?;
    if header.len() < 2 {
        return Err(CliError::Input { path: input.into(), message: "need an x column and at least one series".into() });
    }
    let series: Vec<(String, Vec<f64>)> =
        header.iter().zip(&columns).skip(1).filter(|(h, _)| keep(h)).map(|(h, c)| (h.clone(), c.clone())).collect();
    write(out, lines_svg(&columns[0], &series, &title_of(input), &header[0]))
}

fn image(input: &Path, out: &Path) -> Result<()> {
    let text = read_to_string(input)?;
    let bad = |msg: &str| CliError::Input { path: input.into(), message: msg.into() };
    let mut groups: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        let [dim, pers, birth, value] = cells[..] else { return Err(bad("expected dim,persistence,birth,value rows")) };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("non-numeric cell"));
        groups.entry(dim.to_lowercase()).or_default().push((num(pers)?, num(birth)?, num(value)?));
    }
    for (dim, cells) in groups {
        let mut ps: Vec<f64> = cells.iter().map(|c| c.0).collect();
        let mut bs: Vec<f64> = cells.iter().map(|c| c.1).collect();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        bs.sort_by(f64::total_cmp);
        bs.dedup();
        let mut grid = vec![vec![0.0; bs.len()]; ps.len()];
        for (p, b, v) in &cells {
            let i = ps.partition_point(|x| x < p);
            let j = bs.partition_point(|x| x < b);
            grid[i][j] = *v;
        }
        let half = |xs: &[f64]| if xs.len() > 1 { (xs[1] - xs[0]) / 2.0 } else { 0.5 };
        let x_range = (bs[0] - half(&bs), bs[bs.len() - 1] + half(&bs));
        let y_range = (ps[0] - half(&ps), ps[ps.len() - 1] + half(&ps));
        let path = PathBuf::from(format!("{}_{dim}.svg", out.display()));
        write(&path, heatmap_svg(&grid, &format!("{} {dim}", title_of(input)), x_range, y_range))?;
    }
    Ok(())
}

pub fn run(args: &PlotArgs) -> Result<ExitCode> {
    match &args.kind {
        PlotKind::Diagram { input, out } => {
            let diag =
                read_diagram(input).map_err(|e| CliError::Input { path: input.clone(), message: e.to_string() })?;
            write(out, diagram_svg(&diag, &title_of(input)))?;
        }
        PlotKind::Curve { input, out } => curve(input, out, |_| true)?,
        PlotKind::History { input, out } => curve(input, out, |h| h.ends_with("loss"))?,
        PlotKind::Image { input, out } => image(input, out)?,
    }
    Ok(ExitCode::SUCCESS)
}
