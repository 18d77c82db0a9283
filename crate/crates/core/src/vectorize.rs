//! Classical fixed-length summaries of a finite persistence diagram.
//!
//! The tent of a point `(b, d)` is `max(0, min(t - b, d - t))`. Landscapes
//! take the k-th largest tent at each sample, silhouettes a
//! persistence-weighted mean of all tents. Bars are alive on `[b, d)`.

use crate::diagram::PersistenceDiagram;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum VectorizeError {
    #[error("sample grid must be non-empty and strictly increasing")]
    SampleGrid,
    #[error("diagram has infinite deaths; finitize it first")]
    InfiniteDeath,
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Strictly increasing sample locations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid(Vec<f64>);

impl SampleGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, VectorizeError> {
        let ok = !points.is_empty()
            && points.iter().all(|t| t.is_finite())
            && points.windows(2).all(|w| w[0] < w[1]);
        if ok {
            Ok(Self(points))
        } else {
            Err(VectorizeError::SampleGrid)
        }
    }

    /// `n` evenly spaced samples from `lo` to `hi`, both included.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self, VectorizeError> {
        match n {
            0 => Err(VectorizeError::SampleGrid),
            1 => Self::new(vec![lo]),
            _ => {
                let step = (hi - lo) / (n - 1) as f64;
                Self::new((0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect())
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }
}

impl Default for SampleGrid {
    /// 64 samples over [0, 1].
    fn default() -> Self {
        Self::uniform(0.0, 1.0, 64).expect("valid default grid")
    }
}

/// One or more curves sampled on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub t_grid: Vec<f64>,
    /// One row per level; a single row for Betti curves and silhouettes.
    pub levels: Vec<Vec<f64>>,
}

impl SampledCurve {
    pub fn values(&self) -> &[f64] {
        &self.levels[0]
    }

    /// Concatenation of all levels.
    pub fn flatten(&self) -> Vec<f64> {
        self.levels.concat()
    }

    /// `t` followed by one column per level, named `{name}_{k}`.
    pub fn to_csv(&self, name: &str) -> String {
        let mut out = String::from("t");
        for k in 1..=self.levels.len() {
            out.push_str(&format!(",{name}_{k}"));
        }
        out.push('\n');
        for (i, t) in self.t_grid.iter().enumerate() {
            out.push_str(&t.to_string());
            for level in &self.levels {
                out.push(',');
                out.push_str(&level[i].to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn finite_points(diag: &PersistenceDiagram) -> Result<Vec<(f64, f64)>, VectorizeError> {
    if !diag.is_finite() {
        return Err(VectorizeError::InfiniteDeath);
    }
    Ok(diag.points().iter().map(|p| (p.birth, p.death)).collect())
}

fn tent(b: f64, d: f64, t: f64) -> f64 {
    (t - b).min(d - t).max(0.0)
}

/// Number of bars alive at each sample.
pub fn betti_curve(diag: &PersistenceDiagram, t_grid: &SampleGrid) -> Result<SampledCurve, VectorizeError> {
    let pts = finite_points(diag)?;
    let values = t_grid
        .points()
        .iter()
        .map(|&t| pts.iter().filter(|&&(b, d)| b <= t && t < d).count() as f64)
        .collect();
    Ok(SampledCurve { t_grid: t_grid.points().to_vec(), levels: vec![values] })
}

/// Landscape levels `1..=max_level`.
pub fn landscapes(
    diag: &PersistenceDiagram,
    max_level: usize,
    t_grid: &SampleGrid,
) -> Result<SampledCurve, VectorizeError> {
    if max_level == 0 {
        return Err(VectorizeError::Parameter("landscape level starts at 1".into()));
    }
    let pts = finite_points(diag)?;
    let mut levels = vec![Vec::with_capacity(t_grid.points().len()); max_level];
    let mut tents = Vec::with_capacity(pts.len());
    for &t in t_grid.points() {
        tents.clear();
        tents.extend(pts.iter().map(|&(b, d)| tent(b, d, t)));
        tents.sort_unstable_by(|a, b| b.total_cmp(a));
        for (k, level) in levels.iter_mut().enumerate() {
            level.push(tents.get(k).copied().unwrap_or(0.0));
        }
    }
    Ok(SampledCurve { t_grid: t_grid.points().to_vec(), levels })
}

/// The single landscape level `k` (1-based).
pub fn landscape(diag: &PersistenceDiagram, k: usize, t_grid: &SampleGrid) -> Result<SampledCurve, VectorizeError> {
    let mut all = landscapes(diag, k, t_grid)?;
    let level = all.levels.pop().expect("k >= 1 levels");
    Ok(SampledCurve { t_grid: all.t_grid, levels: vec![level] })
}

/// Weighted mean of tents with weights `(d - b)^p`. All zeros for an empty
/// diagram.
pub fn silhouette(diag: &PersistenceDiagram, p: f64, t_grid: &SampleGrid) -> Result<SampledCurve, VectorizeError> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(VectorizeError::Parameter(format!("weight power {p} must be finite and >= 0")));
    }
    let pts = finite_points(diag)?;
    let weights: Vec<f64> = pts.iter().map(|&(b, d)| (d - b).powf(p)).collect();
    let total: f64 = weights.iter().sum();
    let values = t_grid
        .points()
        .iter()
        .map(|&t| {
            if total == 0.0 {
                return 0.0;
            }
            pts.iter().zip(&weights).map(|(&(b, d), w)| w * tent(b, d, t)).sum::<f64>() / total
        })
        .collect();
    Ok(SampledCurve { t_grid: t_grid.points().to_vec(), levels: vec![values] })
}

/// Pixel layout of a persistence image over the (birth, persistence) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistenceImageSpec {
    pub rows: usize,
    pub cols: usize,
    /// Birth range covered by the columns.
    pub birth_range: (f64, f64),
    /// Persistence range covered by the rows.
    pub persistence_range: (f64, f64),
    pub sigma: f64,
}

impl Default for PersistenceImageSpec {
    fn default() -> Self {
        Self { rows: 16, cols: 16, birth_range: (0.0, 1.0), persistence_range: (0.0, 1.0), sigma: 0.05 }
    }
}

impl PersistenceImageSpec {
    /// Center of column `j` on the birth axis.
    pub fn birth_center(&self, j: usize) -> f64 {
        let (lo, hi) = self.birth_range;
        lo + (j as f64 + 0.5) * (hi - lo) / self.cols as f64
    }

    /// Center of row `i` on the persistence axis.
    pub fn persistence_center(&self, i: usize) -> f64 {
        let (lo, hi) = self.persistence_range;
        lo + (i as f64 + 0.5) * (hi - lo) / self.rows as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceImage {
    pub spec: PersistenceImageSpec,
    /// Row-major, `rows x cols`; row `i` is persistence, column `j` birth.
    pub values: Vec<f64>,
}

impl PersistenceImage {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.spec.cols + col]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.spec.cols) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Sum over points of `pers * N((b, pers), sigma^2 I)` evaluated at pixel
/// centers, with the normalized Gaussian density.
pub fn persistence_image(
    diag: &PersistenceDiagram,
    spec: &PersistenceImageSpec,
) -> Result<PersistenceImage, VectorizeError> {
    if !(spec.sigma > 0.0) || spec.rows == 0 || spec.cols == 0 {
        return Err(VectorizeError::Parameter(format!(
            "persistence image needs sigma > 0 and a non-empty grid, got {spec:?}"
        )));
    }
    let pts = finite_points(diag)?;
    let var = spec.sigma * spec.sigma;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var);
    let mut values = vec![0.0; spec.rows * spec.cols];
    for i in 0..spec.rows {
        let y = spec.persistence_center(i);
        for j in 0..spec.cols {
            let x = spec.birth_center(j);
            values[i * spec.cols + j] = pts
                .iter()
                .map(|&(b, d)| {
                    let pers = d - b;
                    let r2 = (x - b).powi(2) + (y - pers).powi(2);
                    pers * norm * (-r2 / (2.0 * var)).exp()
                })
                .sum();
        }
    }
    Ok(PersistenceImage { spec: *spec, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{HomDim, PersistencePoint};

    fn diag(pairs: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::new(pairs.iter().map(|&(b, d)| PersistencePoint::finite(b, d, HomDim::H0)).collect())
            .unwrap()
    }

    fn at(t: f64) -> SampleGrid {
        SampleGrid::new(vec![t]).unwrap()
    }

    #[test]
    fn sample_grid_validation() {
        assert!(SampleGrid::new(vec![]).is_err());
        assert!(SampleGrid::new(vec![0.0, 0.0]).is_err());
        assert!(SampleGrid::new(vec![1.0, 0.5]).is_err());
        let g = SampleGrid::default();
        assert_eq!(g.points().len(), 64);
        assert_eq!((g.points()[0], g.points()[63]), (0.0, 1.0));
    }

    #[test]
    fn betti_examples() {
        let d = diag(&[(0.0, 2.0), (1.0, 3.0)]);
        assert_eq!(betti_curve(&d, &at(1.5)).unwrap().values(), [2.0]);
        assert_eq!(betti_curve(&d, &at(2.5)).unwrap().values(), [1.0]);
        assert_eq!(betti_curve(&d, &at(2.0)).unwrap().values(), [1.0]);
        let empty = betti_curve(&PersistenceDiagram::empty(), &SampleGrid::default()).unwrap();
        assert!(empty.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn landscape_examples() {
        let one = diag(&[(0.0, 2.0)]);
        assert_eq!(landscape(&one, 1, &at(1.0)).unwrap().values(), [1.0]);
        assert_eq!(landscape(&one, 1, &at(0.5)).unwrap().values(), [0.5]);
        let g = SampleGrid::uniform(-1.0, 3.0, 41).unwrap();
        assert!(landscape(&one, 2, &g).unwrap().values().iter().all(|&v| v == 0.0));
        let twice = diag(&[(0.0, 2.0), (0.0, 2.0)]);
        assert_eq!(landscape(&twice, 2, &at(1.0)).unwrap().values(), [1.0]);
        assert!(landscape(&one, 0, &g).is_err());
    }

    #[test]
    fn silhouette_examples() {
        let one = diag(&[(0.0, 2.0)]);
        let g = SampleGrid::uniform(-1.0, 3.0, 17).unwrap();
        let s = silhouette(&one, 1.0, &g).unwrap();
        for (t, v) in g.points().iter().zip(s.values()) {
            assert_eq!(*v, tent(0.0, 2.0, *t));
        }
        let two = diag(&[(0.0, 2.0), (1.0, 3.0)]);
        assert_eq!(silhouette(&two, 1.0, &at(1.5)).unwrap().values(), [0.5]);

        let uneven = diag(&[(0.0, 4.0), (1.0, 2.0)]);
        let s0 = silhouette(&uneven, 0.0, &at(1.5)).unwrap().values()[0];
        assert_eq!(s0, (1.5 + 0.5) / 2.0);
        assert!(silhouette(&PersistenceDiagram::empty(), 1.0, &g).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(silhouette(&one, -1.0, &g).is_err());
    }

    #[test]
    fn persistence_image_examples() {
        let spec = PersistenceImageSpec {
            rows: 1,
            cols: 1,
            birth_range: (-0.5, 0.5),
            persistence_range: (1.5, 2.5),
            sigma: 0.1,
        };
        let img = persistence_image(&diag(&[(0.0, 2.0)]), &spec).unwrap();
        let expected = 2.0 / (2.0 * std::f64::consts::PI * 0.01);
        assert!((img.values[0] - expected).abs() <= 1e-12, "{}", img.values[0]);
        assert!((expected - 31.831).abs() < 1e-3);

        let empty = persistence_image(&PersistenceDiagram::empty(), &PersistenceImageSpec::default()).unwrap();
        assert!(empty.values.iter().all(|&v| v == 0.0));
        assert!(persistence_image(&diag(&[]), &PersistenceImageSpec { sigma: 0.0, ..spec }).is_err());
    }

    #[test]
    fn rejects_infinite_deaths() {
        let d = PersistenceDiagram::new(vec![PersistencePoint::essential(0.0, HomDim::H0)]).unwrap();
        assert_eq!(betti_curve(&d, &at(0.0)).unwrap_err(), VectorizeError::InfiniteDeath);
    }
}
