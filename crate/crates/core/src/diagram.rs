//! Persistence diagrams and their preprocessing into fixed-size point
//! features.
//!
//! The preprocessing chain for one image is
//! `finitize -> filter_persistence -> scale_normalize -> to_point_features`.
//! The persistence filter works in raw intensity units, so it runs before
//! scaling.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DiagramError {
    #[error("invalid point {index}: {reason}")]
    InvalidPoint { index: usize, reason: String },
    #[error("{0}")]
    Argument(String),
    #[error("malformed diagram file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Homology dimension of a diagram point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HomDim {
    H0,
    H1,
}

impl HomDim {
    pub const ALL: [HomDim; 2] = [HomDim::H0, HomDim::H1];

    pub fn index(self) -> usize {
        match self {
            HomDim::H0 => 0,
            HomDim::H1 => 1,
        }
    }

    pub fn from_index(i: u64) -> Option<Self> {
        match i {
            0 => Some(HomDim::H0),
            1 => Some(HomDim::H1),
            _ => None,
        }
    }
}

impl fmt::Display for HomDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H{}", self.index())
    }
}

/// One (birth, death) pair. Essential points never die in the filtration;
/// their death is `+inf` until [`finitize`] replaces it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePoint {
    pub birth: f64,
    pub death: f64,
    pub dim: HomDim,
    pub essential: bool,
}

impl PersistencePoint {
    pub fn finite(birth: f64, death: f64, dim: HomDim) -> Self {
        Self { birth, death, dim, essential: false }
    }

    pub fn essential(birth: f64, dim: HomDim) -> Self {
        Self { birth, death: f64::INFINITY, dim, essential: true }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    /// Alive on the half-open interval `[birth, death)`.
    pub fn alive_at(&self, t: f64) -> bool {
        self.birth <= t && t < self.death
    }

    fn check(&self) -> Result<(), String> {
        if !self.birth.is_finite() {
            return Err(format!("birth {} is not finite", self.birth));
        }
        if self.death.is_nan() {
            return Err("death is NaN".into());
        }
        if self.essential {
            if self.death == f64::NEG_INFINITY || self.death < self.birth {
                return Err(format!("essential death {} precedes birth {}", self.death, self.birth));
            }
        } else if !self.death.is_finite() {
            return Err("non-essential point with infinite death".into());
        } else if self.death <= self.birth {
            return Err(format!("death {} does not exceed birth {}", self.death, self.birth));
        }
        Ok(())
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then(self.birth.total_cmp(&other.birth))
            .then(self.death.total_cmp(&other.death))
            .then(self.essential.cmp(&other.essential))
    }
}

/// A multiset of persistence points, kept in canonical order
/// (dimension, birth, death).
#[derive(Debug, Clone, Default)]
pub struct PersistenceDiagram {
    points: Vec<PersistencePoint>,
}

impl PartialEq for PersistenceDiagram {
    fn eq(&self, other: &Self) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| a.canonical_cmp(b) == Ordering::Equal)
    }
}

impl PersistenceDiagram {
    pub fn new(mut points: Vec<PersistencePoint>) -> Result<Self, DiagramError> {
        for (index, p) in points.iter().enumerate() {
            p.check().map_err(|reason| DiagramError::InvalidPoint { index, reason })?;
        }
        points.sort_by(PersistencePoint::canonical_cmp);
        Ok(Self { points })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[PersistencePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn of_dim(&self, dim: HomDim) -> impl Iterator<Item = &PersistencePoint> + '_ {
        self.points.iter().filter(move |p| p.dim == dim)
    }

    /// The sub-diagram of one homology dimension.
    pub fn restrict(&self, dim: HomDim) -> PersistenceDiagram {
        Self { points: self.of_dim(dim).copied().collect() }
    }

    /// True when no point has an infinite death.
    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.death.is_finite())
    }

    /// Number of points of dimension `dim` alive at `t`.
    pub fn alive_count(&self, dim: HomDim, t: f64) -> usize {
        self.of_dim(dim).filter(|p| p.alive_at(t)).count()
    }

    pub fn to_json(&self) -> String {
        let file = DiagramFile {
            points: self
                .points
                .iter()
                .map(|p| PointRecord {
                    birth: p.birth,
                    death: p.death.is_finite().then_some(p.death),
                    dim: p.dim.index() as u64,
                    essential: p.essential,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("diagram serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &[u8]) -> Result<Self, DiagramError> {
        let file: DiagramFile =
            serde_json::from_slice(text).map_err(|e| DiagramError::Format(e.to_string()))?;
        let points = file
            .points
            .into_iter()
            .enumerate()
            .map(|(index, r)| {
                let dim = HomDim::from_index(r.dim).ok_or_else(|| DiagramError::InvalidPoint {
                    index,
                    reason: format!("dim {} is not 0 or 1", r.dim),
                })?;
                let death = match (r.death, r.essential) {
                    (Some(d), _) => d,
                    (None, true) => f64::INFINITY,
                    (None, false) => {
                        return Err(DiagramError::InvalidPoint {
                            index,
                            reason: "missing death on a non-essential point".into(),
                        })
                    }
                };
                Ok(PersistencePoint { birth: r.birth, death, dim, essential: r.essential })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(points)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagramFile {
    points: Vec<PointRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointRecord {
    birth: f64,
    /// `null` for an essential point that has not been finitized.
    death: Option<f64>,
    dim: u64,
    essential: bool,
}

pub fn read_diagram(path: impl AsRef<Path>) -> Result<PersistenceDiagram, DiagramError> {
    PersistenceDiagram::from_json(&std::fs::read(path)?)
}

pub fn write_diagram(path: impl AsRef<Path>, diagram: &PersistenceDiagram) -> Result<(), DiagramError> {
    std::fs::write(path, diagram.to_json())?;
    Ok(())
}

/// Replaces every infinite death by `max_value`.
///
/// Essential points keep their flag. An essential point born at `max_value`
/// ends up with zero persistence and is removed by any positive
/// persistence filter.
pub fn finitize(diag: &PersistenceDiagram, max_value: f64) -> Result<PersistenceDiagram, DiagramError> {
    for p in &diag.points {
        let worst = if p.death.is_finite() { p.death } else { p.birth };
        if worst > max_value {
            return Err(DiagramError::Argument(format!(
                "max_value {max_value} is below finite coordinate {worst}"
            )));
        }
    }
    let points = diag
        .points
        .iter()
        .map(|p| PersistencePoint {
            death: if p.death.is_finite() { p.death } else { max_value },
            ..*p
        })
        .collect();
    PersistenceDiagram::new(points)
}

/// Keeps points with `death - birth >= min_pers`.
pub fn filter_persistence(diag: &PersistenceDiagram, min_pers: f64) -> PersistenceDiagram {
    PersistenceDiagram {
        points: diag.points.iter().filter(|p| p.persistence() >= min_pers).copied().collect(),
    }
}

/// Per-coordinate mean and standard deviation of scaled (birth, death).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: [f64; 2],
    pub std: [f64; 2],
}

impl NormalizationStats {
    pub const MIN_STD: f64 = 1e-8;

    pub fn identity() -> Self {
        Self { mean: [0.0; 2], std: [1.0; 2] }
    }

    pub fn new(mean: [f64; 2], std: [f64; 2]) -> Self {
        Self { mean, std: std.map(|s| s.max(Self::MIN_STD)) }
    }

    /// Pools every point of every diagram after division by
    /// `intensity_max`. Uses the population standard deviation.
    pub fn fit<'a>(
        diagrams: impl IntoIterator<Item = &'a PersistenceDiagram>,
        intensity_max: f64,
    ) -> Result<Self, DiagramError> {
        let mut n = 0usize;
        let mut sum = [0.0; 2];
        let mut sum_sq = [0.0; 2];
        for d in diagrams {
            if !d.is_finite() {
                return Err(DiagramError::Argument("statistics need finitized diagrams".into()));
            }
            for p in &d.points {
                let x = [p.birth / intensity_max, p.death / intensity_max];
                for k in 0..2 {
                    sum[k] += x[k];
                    sum_sq[k] += x[k] * x[k];
                }
                n += 1;
            }
        }
        if n == 0 {
            return Ok(Self::identity());
        }
        let nf = n as f64;
        let mean = sum.map(|s| s / nf);
        let var = [0, 1].map(|k| (sum_sq[k] / nf - mean[k] * mean[k]).max(0.0));
        Ok(Self::new(mean, var.map(f64::sqrt)))
    }
}

/// A scaled and z-scored diagram.
///
/// Z-scoring with different per-coordinate statistics can reorder birth and
/// death, so each point carries its pre-normalization persistence for
/// ranking.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalizedDiagram {
    pub points: Vec<NormalizedPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedPoint {
    pub birth: f64,
    pub death: f64,
    pub dim: HomDim,
    /// Persistence before z-scoring, in scaled units.
    pub persistence: f64,
}

impl NormalizedDiagram {
    /// Wraps already-normalized coordinates; ranking uses `death - birth`.
    pub fn from_coords(points: impl IntoIterator<Item = (f64, f64, HomDim)>) -> Self {
        Self {
            points: points
                .into_iter()
                .map(|(birth, death, dim)| NormalizedPoint { birth, death, dim, persistence: death - birth })
                .collect(),
        }
    }
}

/// Divides coordinates by `intensity_max`, then z-scores with `stats`.
pub fn scale_normalize(
    diag: &PersistenceDiagram,
    intensity_max: f64,
    stats: &NormalizationStats,
) -> Result<NormalizedDiagram, DiagramError> {
    if !diag.is_finite() {
        return Err(DiagramError::Argument("scale_normalize needs a finitized diagram".into()));
    }
    if !(intensity_max > 0.0) {
        return Err(DiagramError::Argument(format!("intensity_max {intensity_max} must be positive")));
    }
    Ok(NormalizedDiagram {
        points: diag
            .points
            .iter()
            .map(|p| {
                let (b, d) = (p.birth / intensity_max, p.death / intensity_max);
                NormalizedPoint {
                    birth: (b - stats.mean[0]) / stats.std[0],
                    death: (d - stats.mean[1]) / stats.std[1],
                    dim: p.dim,
                    persistence: d - b,
                }
            })
            .collect(),
    })
}

/// Columns per feature row: birth, death, one-hot H0, one-hot H1, presence.
pub const FEATURE_WIDTH: usize = 5;
pub const FEATURE_HEADER: &str = "birth,death,h0,h1,presence";
pub const DEFAULT_POINTS_PER_GROUP: usize = 150;

/// Fixed-shape encoder input: an H0 block followed by an H1 block, each
/// `n_per_group` rows of [`FEATURE_WIDTH`] columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFeatureMatrix {
    n_per_group: usize,
    data: Vec<f64>,
}

impl PointFeatureMatrix {
    pub fn n_per_group(&self) -> usize {
        self.n_per_group
    }

    pub fn rows(&self) -> usize {
        2 * self.n_per_group
    }

    pub fn cols(&self) -> usize {
        FEATURE_WIDTH
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * FEATURE_WIDTH..(i + 1) * FEATURE_WIDTH]
    }

    pub fn is_present(&self, i: usize) -> bool {
        self.row(i)[4] == 1.0
    }

    pub fn presence_mask(&self) -> Vec<bool> {
        (0..self.rows()).map(|i| self.is_present(i)).collect()
    }

    pub fn presence_count(&self) -> usize {
        (0..self.rows()).filter(|&i| self.is_present(i)).count()
    }

    /// Returns a copy with rows reordered by `perm` (row `i` of the result is
    /// row `perm[i]` of `self`). The block structure is not preserved.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rows());
        let mut data = Vec::with_capacity(self.data.len());
        for &i in perm {
            data.extend_from_slice(self.row(i));
        }
        Self { n_per_group: self.n_per_group, data }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(FEATURE_HEADER);
        out.push('\n');
        for i in 0..self.rows() {
            let cells: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the CSV written by [`to_csv`](Self::to_csv) and re-checks the
    /// block invariants.
    pub fn from_csv(text: &str) -> Result<Self, DiagramError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == FEATURE_HEADER => {}
            other => return Err(DiagramError::Format(format!("bad header {other:?}"))),
        }
        let mut data = Vec::new();
        for (i, line) in lines.enumerate() {
            let cells: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<_>>()
                .ok_or_else(|| DiagramError::Format(format!("row {i}: {line:?}")))?;
            if cells.len() != FEATURE_WIDTH {
                return Err(DiagramError::Format(format!("row {i} has {} cells", cells.len())));
            }
            data.extend(cells);
        }
        let rows = data.len() / FEATURE_WIDTH;
        if rows == 0 || rows % 2 != 0 {
            return Err(DiagramError::Format(format!("{rows} rows is not two equal blocks")));
        }
        let m = Self { n_per_group: rows / 2, data };
        m.check_blocks()?;
        Ok(m)
    }

    fn check_blocks(&self) -> Result<(), DiagramError> {
        for i in 0..self.rows() {
            let r = self.row(i);
            let dim = if i < self.n_per_group { 0 } else { 1 };
            let tag_ok = r[2 + dim] == 1.0 && r[3 - dim] == 0.0;
            let presence_ok = r[4] == 1.0 || (r[4] == 0.0 && r[0] == 0.0 && r[1] == 0.0);
            if !tag_ok || !presence_ok {
                return Err(DiagramError::Format(format!("row {i} breaks the block layout: {r:?}")));
            }
        }
        Ok(())
    }
}

/// Ranks each homology group by persistence (descending, ties by smaller
/// birth then smaller death), keeps the top `n_per_group`, and pads with
/// `(0, 0)` rows whose presence flag is 0.
pub fn to_point_features(diag: &NormalizedDiagram, n_per_group: usize) -> PointFeatureMatrix {
    let mut data = Vec::with_capacity(2 * n_per_group * FEATURE_WIDTH);
    for dim in HomDim::ALL {
        let mut group: Vec<&NormalizedPoint> = diag.points.iter().filter(|p| p.dim == dim).collect();
        group.sort_by(|a, b| {
            b.persistence
                .total_cmp(&a.persistence)
                .then(a.birth.total_cmp(&b.birth))
                .then(a.death.total_cmp(&b.death))
        });
        let onehot = match dim {
            HomDim::H0 => [1.0, 0.0],
            HomDim::H1 => [0.0, 1.0],
        };
        for p in group.iter().take(n_per_group) {
            data.extend_from_slice(&[p.birth, p.death, onehot[0], onehot[1], 1.0]);
        }
        for _ in group.len().min(n_per_group)..n_per_group {
            data.extend_from_slice(&[0.0, 0.0, onehot[0], onehot[1], 0.0]);
        }
    }
    PointFeatureMatrix { n_per_group, data }
}

/// Settings of the raw-diagram half of the preprocessing chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Replacement for infinite deaths.
    pub finitize_max: f64,
    /// Minimum persistence, raw intensity units.
    pub min_persistence: f64,
    /// Divisor mapping intensities into [0, 1].
    pub intensity_max: f64,
    pub n_per_group: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            finitize_max: 255.0,
            min_persistence: 10.0,
            intensity_max: 255.0,
            n_per_group: DEFAULT_POINTS_PER_GROUP,
        }
    }
}

impl PreprocessConfig {
    /// Finitizes and filters a raw diagram.
    pub fn clean(&self, diag: &PersistenceDiagram) -> Result<PersistenceDiagram, DiagramError> {
        Ok(filter_persistence(&finitize(diag, self.finitize_max)?, self.min_persistence))
    }

    /// Scales, normalizes and packs a cleaned diagram.
    pub fn features(
        &self,
        cleaned: &PersistenceDiagram,
        stats: &NormalizationStats,
    ) -> Result<PointFeatureMatrix, DiagramError> {
        let normalized = scale_normalize(cleaned, self.intensity_max, stats)?;
        Ok(to_point_features(&normalized, self.n_per_group))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use HomDim::*;

    fn diag(points: &[(f64, f64, HomDim)]) -> PersistenceDiagram {
        PersistenceDiagram::new(
            points
                .iter()
                .map(|&(b, d, dim)| {
                    if d.is_infinite() {
                        PersistencePoint::essential(b, dim)
                    } else {
                        PersistencePoint::finite(b, d, dim)
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    fn coords(d: &PersistenceDiagram) -> Vec<(f64, f64)> {
        d.points().iter().map(|p| (p.birth, p.death)).collect()
    }

    #[test]
    fn finitize_examples() {
        let d = finitize(&diag(&[(7.0, f64::INFINITY, H0)]), 255.0).unwrap();
        assert_eq!(coords(&d), [(7.0, 255.0)]);
        assert!(d.points()[0].essential);

        let plain = diag(&[(1.0, 4.0, H0), (2.0, 3.0, H1)]);
        assert_eq!(finitize(&plain, 255.0).unwrap(), plain);

        let d = finitize(&diag(&[(0.0, f64::INFINITY, H0), (1.0, 2.0, H0)]), 2.0).unwrap();
        assert_eq!(coords(&d), [(0.0, 2.0), (1.0, 2.0)]);

        assert!(finitize(&diag(&[(0.0, 20.0, H0)]), 10.0).is_err());
    }

    #[test]
    fn filter_examples() {
        let d = filter_persistence(&diag(&[(0.0, 5.0, H0), (0.0, 20.0, H0)]), 10.0);
        assert_eq!(coords(&d), [(0.0, 20.0)]);
        let d = filter_persistence(&diag(&[(0.0, 10.0, H0)]), 10.0);
        assert_eq!(coords(&d), [(0.0, 10.0)]);
        assert!(filter_persistence(&PersistenceDiagram::empty(), 10.0).is_empty());
    }

    #[test]
    fn scale_normalize_examples() {
        let n = scale_normalize(&diag(&[(0.0, 255.0, H0)]), 255.0, &NormalizationStats::identity()).unwrap();
        assert_eq!((n.points[0].birth, n.points[0].death), (0.0, 1.0));

        let stats = NormalizationStats::new([0.2, 0.4], [1.0, 1.0]);
        let n = scale_normalize(&diag(&[(51.0, 102.0, H1)]), 255.0, &stats).unwrap();
        assert!(n.points[0].birth.abs() < 1e-15 && n.points[0].death.abs() < 1e-15);
        assert_eq!(n.points[0].dim, H1);

        let d = diag(&[(3.0, 40.0, H0), (10.0, 90.0, H1), (0.0, 255.0, H0)]);
        let stats = NormalizationStats::fit([&d], 255.0).unwrap();
        let n = scale_normalize(&d, 255.0, &stats).unwrap();
        let mean_b: f64 = n.points.iter().map(|p| p.birth).sum::<f64>() / 3.0;
        let mean_d: f64 = n.points.iter().map(|p| p.death).sum::<f64>() / 3.0;
        assert!(mean_b.abs() < 1e-12 && mean_d.abs() < 1e-12);

        assert!(scale_normalize(&diag(&[(0.0, f64::INFINITY, H0)]), 255.0, &stats).is_err());
    }

    #[test]
    fn stats_clamp_std() {
        let d = diag(&[(5.0, 50.0, H0)]);
        let stats = NormalizationStats::fit([&d], 255.0).unwrap();
        assert_eq!(stats.std, [NormalizationStats::MIN_STD; 2]);
        assert_eq!(NormalizationStats::fit([], 255.0).unwrap(), NormalizationStats::identity());
    }

    #[test]
    fn point_features_all_padding() {
        let m = to_point_features(&NormalizedDiagram::default(), 3);
        assert_eq!((m.rows(), m.cols()), (6, 5));
        for i in 0..6 {
            let tag = if i < 3 { [1.0, 0.0] } else { [0.0, 1.0] };
            assert_eq!(m.row(i), [0.0, 0.0, tag[0], tag[1], 0.0]);
        }
        assert_eq!(m.presence_count(), 0);
    }

    #[test]
    fn point_features_sort_and_truncate() {
        let n = NormalizedDiagram::from_coords([(0.0, 0.2, H0), (0.0, 1.0, H0)]);
        let m = to_point_features(&n, 3);
        assert_eq!(m.row(0), [0.0, 1.0, 1.0, 0.0, 1.0]);
        assert_eq!(m.row(1), [0.0, 0.2, 1.0, 0.0, 1.0]);
        assert_eq!(m.row(2), [0.0, 0.0, 1.0, 0.0, 0.0]);

        let five = NormalizedDiagram::from_coords((1..=5).map(|k| (0.0, k as f64, H0)));
        let m = to_point_features(&five, 3);
        let deaths: Vec<f64> = (0..3).map(|i| m.row(i)[1]).collect();
        assert_eq!(deaths, [5.0, 4.0, 3.0]);
        assert_eq!(m.presence_count(), 3);
    }

    #[test]
    fn equal_persistence_ties_break_by_birth() {
        let n = NormalizedDiagram::from_coords([(0.5, 1.5, H1), (0.1, 1.1, H1)]);
        let m = to_point_features(&n, 2);
        assert_eq!(m.row(2)[0], 0.1);
        assert_eq!(m.row(3)[0], 0.5);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let d = diag(&[(0.0, f64::INFINITY, H0), (1.5, 2.25, H0), (3.0, 9.0, H1)]);
        assert_eq!(PersistenceDiagram::from_json(d.to_json().as_bytes()).unwrap(), d);
        let empty = PersistenceDiagram::empty();
        assert_eq!(PersistenceDiagram::from_json(empty.to_json().as_bytes()).unwrap(), empty);

        let bad = br#"{"points":[{"birth":5.0,"death":1.0,"dim":0,"essential":false}]}"#;
        assert!(matches!(PersistenceDiagram::from_json(bad), Err(DiagramError::InvalidPoint { .. })));
        for bad in [
            &br#"{"points":[{"birth":0.0,"death":1.0,"dim":2,"essential":false}]}"#[..],
            br#"{"points":[{"birth":0.0,"death":null,"dim":0,"essential":false}]}"#,
            br#"{"points":[{"birth":NaN,"death":1.0,"dim":0,"essential":false}]}"#,
            br#"{"points":[]"#,
            br#"{"pts":[]}"#,
        ] {
            assert!(PersistenceDiagram::from_json(bad).is_err());
        }
    }

    #[test]
    fn feature_csv_round_trip() {
        let n = NormalizedDiagram::from_coords([(0.25, 1.0, H0), (-0.5, 0.75, H1)]);
        let m = to_point_features(&n, 2);
        assert_eq!(PointFeatureMatrix::from_csv(&m.to_csv()).unwrap(), m);
        assert!(PointFeatureMatrix::from_csv("birth,death,h0,h1,presence\n1,1,0,1,1\n").is_err());
        assert!(PointFeatureMatrix::from_csv("x\n").is_err());
    }
}
