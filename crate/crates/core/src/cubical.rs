//! Sublevel cubical filtration of a grid and its persistence pairing.
//!
//! Cells follow the V-construction. A cell's filtration value is the
//! maximum over its vertices, and cells are ordered by
//! `(value, dim, row, col, orientation)`, which puts every face before its
//! cofaces. Boundaries are never materialized: they are derived from the
//! grid geometry on demand.
//!
//! [`compute_persistence`] runs the standard column reduction over Z/2 with
//! clearing: square columns are reduced first, and every edge that becomes
//! a square pivot is skipped when edge columns are reduced.
//! [`pair_h0_union_find`] is an independent elder-rule pass that must agree
//! with the H0 part of the reduction; [`persistence_diagram`] combines it
//! with the square reduction and is the path used by the pipeline.

use std::cmp::Ordering;

use crate::diagram::{HomDim, PersistenceDiagram, PersistencePoint};
use crate::grid::GrayscaleGrid;
use crate::union_find::DisjointSet;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CubicalError {
    #[error("filtration invariant violated at position {position}: {reason}")]
    InvalidFiltration { position: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellKind {
    Vertex,
    /// Joins `(row, col)` and `(row, col + 1)`.
    HorizontalEdge,
    /// Joins `(row, col)` and `(row + 1, col)`.
    VerticalEdge,
    /// Spans the 2x2 block with top-left pixel `(row, col)`.
    Square,
}

impl CellKind {
    pub fn dim(self) -> usize {
        match self {
            CellKind::Vertex => 0,
            CellKind::HorizontalEdge | CellKind::VerticalEdge => 1,
            CellKind::Square => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub kind: CellKind,
    pub row: u32,
    pub col: u32,
    pub value: f64,
}

impl Cell {
    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    fn order(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.dim().cmp(&other.dim()))
            .then(self.row.cmp(&other.row))
            .then(self.col.cmp(&other.col))
            .then(self.kind.cmp(&other.kind))
    }
}

const NONE: u32 = u32::MAX;

/// Cells of a grid's cubical complex in filtration order.
#[derive(Debug, Clone)]
pub struct CubicalFiltration {
    height: usize,
    width: usize,
    cells: Vec<Cell>,
    /// Filtration position of each cell, indexed by geometric id.
    position: Vec<u32>,
}

/// Total cell count `V + E + F` of an `h x w` grid.
pub fn cell_count(height: usize, width: usize) -> usize {
    height * width + height * (width - 1) + (height - 1) * width + (height - 1) * (width - 1)
}

impl CubicalFiltration {
    /// Wraps an explicit cell order. Every cell of the `height x width`
    /// complex must appear exactly once; whether the order is a valid
    /// filtration is checked by [`validate`](Self::validate).
    pub fn from_cells(height: usize, width: usize, cells: Vec<Cell>) -> Result<Self, CubicalError> {
        let mut f = Self { height, width, cells, position: Vec::new() };
        if height == 0 || width == 0 || f.cells.len() != cell_count(height, width) {
            return Err(CubicalError::InvalidFiltration {
                position: 0,
                reason: format!("{} cells for a {height}x{width} grid", f.cells.len()),
            });
        }
        let mut position = vec![NONE; f.cells.len()];
        for (pos, cell) in f.cells.iter().enumerate() {
            let id = f.geometric_id(cell).ok_or_else(|| CubicalError::InvalidFiltration {
                position: pos,
                reason: format!("{cell:?} lies outside the grid"),
            })?;
            if position[id] != NONE {
                return Err(CubicalError::InvalidFiltration {
                    position: pos,
                    reason: format!("{cell:?} appears twice"),
                });
            }
            position[id] = pos as u32;
        }
        f.position = position;
        Ok(f)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    fn geometric_id(&self, cell: &Cell) -> Option<usize> {
        let (h, w) = (self.height, self.width);
        let (r, c) = (cell.row as usize, cell.col as usize);
        let n_vert = h * w;
        let n_hedge = h * (w - 1);
        let n_vedge = (h - 1) * w;
        match cell.kind {
            CellKind::Vertex if r < h && c < w => Some(r * w + c),
            CellKind::HorizontalEdge if r < h && c + 1 < w => Some(n_vert + r * (w - 1) + c),
            CellKind::VerticalEdge if r + 1 < h && c < w => Some(n_vert + n_hedge + r * w + c),
            CellKind::Square if r + 1 < h && c + 1 < w => {
                Some(n_vert + n_hedge + n_vedge + r * (w - 1) + c)
            }
            _ => None,
        }
    }

    fn pos_of(&self, kind: CellKind, row: u32, col: u32) -> u32 {
        let id = self
            .geometric_id(&Cell { kind, row, col, value: 0.0 })
            .expect("face inside grid");
        self.position[id]
    }

    /// Filtration positions of the facets of the cell at `pos`, ascending.
    pub fn boundary(&self, pos: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(4);
        self.boundary_into(pos, &mut out);
        out
    }

    fn boundary_into(&self, pos: usize, out: &mut Vec<u32>) {
        use CellKind::*;
        out.clear();
        let Cell { kind, row: r, col: c, .. } = self.cells[pos];
        match kind {
            Vertex => {}
            HorizontalEdge => {
                out.push(self.pos_of(Vertex, r, c));
                out.push(self.pos_of(Vertex, r, c + 1));
            }
            VerticalEdge => {
                out.push(self.pos_of(Vertex, r, c));
                out.push(self.pos_of(Vertex, r + 1, c));
            }
            Square => {
                out.push(self.pos_of(HorizontalEdge, r, c));
                out.push(self.pos_of(HorizontalEdge, r + 1, c));
                out.push(self.pos_of(VerticalEdge, r, c));
                out.push(self.pos_of(VerticalEdge, r, c + 1));
            }
        }
        out.sort_unstable();
    }

    /// Checks that values never decrease along the order and that every
    /// face precedes its cofaces with a value no larger.
    pub fn validate(&self) -> Result<(), CubicalError> {
        let mut faces = Vec::with_capacity(4);
        for pos in 0..self.cells.len() {
            let cell = &self.cells[pos];
            if !cell.value.is_finite() {
                return Err(CubicalError::InvalidFiltration {
                    position: pos,
                    reason: "non-finite value".into(),
                });
            }
            if pos > 0 && self.cells[pos - 1].value > cell.value {
                return Err(CubicalError::InvalidFiltration {
                    position: pos,
                    reason: "values are not sorted".into(),
                });
            }
            self.boundary_into(pos, &mut faces);
            for &f in &faces {
                let face = &self.cells[f as usize];
                if f as usize >= pos || face.value > cell.value {
                    return Err(CubicalError::InvalidFiltration {
                        position: pos,
                        reason: format!("face {face:?} does not precede {cell:?}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Builds the sublevel filtration: vertices carry pixel values, edges and
/// squares the maximum of their corners.
pub fn build_filtration(grid: &GrayscaleGrid) -> CubicalFiltration {
    let (h, w) = (grid.height(), grid.width());
    let mut cells = Vec::with_capacity(cell_count(h, w));
    for r in 0..h {
        for c in 0..w {
            let (ru, cu) = (r as u32, c as u32);
            let v = grid.get(r, c);
            cells.push(Cell { kind: CellKind::Vertex, row: ru, col: cu, value: v });
            if c + 1 < w {
                let value = v.max(grid.get(r, c + 1));
                cells.push(Cell { kind: CellKind::HorizontalEdge, row: ru, col: cu, value });
            }
            if r + 1 < h {
                let value = v.max(grid.get(r + 1, c));
                cells.push(Cell { kind: CellKind::VerticalEdge, row: ru, col: cu, value });
            }
            if r + 1 < h && c + 1 < w {
                let value = v
                    .max(grid.get(r, c + 1))
                    .max(grid.get(r + 1, c))
                    .max(grid.get(r + 1, c + 1));
                cells.push(Cell { kind: CellKind::Square, row: ru, col: cu, value });
            }
        }
    }
    cells.sort_unstable_by(Cell::order);
    CubicalFiltration::from_cells(h, w, cells).expect("generated cells cover the grid")
}

/// Symmetric difference of two ascending index lists.
fn add_columns(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

struct Reducer<'a> {
    filtration: &'a CubicalFiltration,
    /// For each row, the column whose reduced pivot it is.
    pivot_owner: Vec<u32>,
    /// Reduced columns, stored only for columns with a pivot.
    reduced: Vec<Vec<u32>>,
}

impl<'a> Reducer<'a> {
    fn new(filtration: &'a CubicalFiltration) -> Self {
        let n = filtration.len();
        Self { filtration, pivot_owner: vec![NONE; n], reduced: vec![Vec::new(); n] }
    }

    /// Reduces every column of dimension `dim` in filtration order, skipping
    /// cleared columns. Returns the columns that reduced to zero.
    fn reduce_dim(&mut self, dim: usize, points: &mut Vec<PersistencePoint>) -> Vec<u32> {
        let cells = self.filtration.cells();
        let hom = if dim == 1 { HomDim::H0 } else { HomDim::H1 };
        let mut zero_columns = Vec::new();
        let mut column = Vec::with_capacity(8);
        let mut scratch = Vec::with_capacity(8);
        for j in 0..cells.len() {
            if cells[j].dim() != dim {
                continue;
            }
            // Clearing: a column that is some higher-dimensional pivot
            // reduces to zero.
            if self.pivot_owner[j] != NONE && cells[self.pivot_owner[j] as usize].dim() > dim {
                continue;
            }
            self.filtration.boundary_into(j, &mut column);
            while let Some(&low) = column.last() {
                let owner = self.pivot_owner[low as usize];
                if owner == NONE {
                    break;
                }
                add_columns(&column, &self.reduced[owner as usize], &mut scratch);
                std::mem::swap(&mut column, &mut scratch);
            }
            match column.last() {
                None => zero_columns.push(j as u32),
                Some(&low) => {
                    self.pivot_owner[low as usize] = j as u32;
                    let (birth, death) = (cells[low as usize].value, cells[j].value);
                    if death > birth {
                        points.push(PersistencePoint::finite(birth, death, hom));
                    }
                    self.reduced[j] = column.clone();
                }
            }
        }
        zero_columns
    }

    fn is_paired(&self, pos: usize) -> bool {
        self.pivot_owner[pos] != NONE
    }
}

/// Full boundary-matrix reduction for H0 and H1.
pub fn compute_persistence(filtration: &CubicalFiltration) -> Result<PersistenceDiagram, CubicalError> {
    filtration.validate()?;
    let mut points = Vec::new();
    let mut reducer = Reducer::new(filtration);
    reducer.reduce_dim(2, &mut points);
    let cycle_edges = reducer.reduce_dim(1, &mut points);
    let cells = filtration.cells();
    for (pos, cell) in cells.iter().enumerate() {
        if cell.dim() == 0 && !reducer.is_paired(pos) {
            points.push(PersistencePoint::essential(cell.value, HomDim::H0));
        }
    }
    for &e in &cycle_edges {
        if !reducer.is_paired(e as usize) {
            points.push(PersistencePoint::essential(cells[e as usize].value, HomDim::H1));
        }
    }
    Ok(PersistenceDiagram::new(points).expect("reduction yields valid points"))
}

/// H0 pairs by union-find under the elder rule: when an edge merges two
/// components, the one whose birth vertex comes later in the filtration
/// dies.
pub fn pair_h0_union_find(filtration: &CubicalFiltration) -> PersistenceDiagram {
    let (points, _) = union_find_pass(filtration);
    PersistenceDiagram::new(points).expect("elder rule yields valid points")
}

/// Returns the H0 points and the positions of edges that closed a cycle.
fn union_find_pass(filtration: &CubicalFiltration) -> (Vec<PersistencePoint>, Vec<u32>) {
    let cells = filtration.cells();
    let w = filtration.width();
    let n_vert = filtration.height() * w;
    // Vertex sets are indexed by pixel id; `oldest` holds the filtration
    // position of each root's birth vertex.
    let mut sets = DisjointSet::new(n_vert);
    let mut oldest = vec![NONE; n_vert];
    let mut points = Vec::new();
    let mut cycle_edges = Vec::new();
    for (pos, cell) in cells.iter().enumerate() {
        let (r, c) = (cell.row as usize, cell.col as usize);
        let (a, b) = match cell.kind {
            CellKind::Vertex => {
                oldest[r * w + c] = pos as u32;
                continue;
            }
            CellKind::HorizontalEdge => (r * w + c, r * w + c + 1),
            CellKind::VerticalEdge => (r * w + c, (r + 1) * w + c),
            CellKind::Square => continue,
        };
        let (ra, rb) = (sets.find(a as u32), sets.find(b as u32));
        if ra == rb {
            cycle_edges.push(pos as u32);
            continue;
        }
        let (elder, younger) = if oldest[ra as usize] < oldest[rb as usize] {
            (oldest[ra as usize], oldest[rb as usize])
        } else {
            (oldest[rb as usize], oldest[ra as usize])
        };
        let birth = cells[younger as usize].value;
        if cell.value > birth {
            points.push(PersistencePoint::finite(birth, cell.value, HomDim::H0));
        }
        sets.union(ra, rb);
        let root = sets.find(ra);
        oldest[root as usize] = elder;
    }
    for v in 0..n_vert as u32 {
        if sets.find(v) == v {
            points.push(PersistencePoint::essential(cells[oldest[v as usize] as usize].value, HomDim::H0));
        }
    }
    (points, cycle_edges)
}

/// H0 by union-find plus H1 by square-column reduction.
pub fn compute_persistence_fast(filtration: &CubicalFiltration) -> Result<PersistenceDiagram, CubicalError> {
    filtration.validate()?;
    let mut points = Vec::new();
    let mut reducer = Reducer::new(filtration);
    reducer.reduce_dim(2, &mut points);
    let (h0, cycle_edges) = union_find_pass(filtration);
    points.extend(h0);
    let cells = filtration.cells();
    for &e in &cycle_edges {
        if !reducer.is_paired(e as usize) {
            points.push(PersistencePoint::essential(cells[e as usize].value, HomDim::H1));
        }
    }
    Ok(PersistenceDiagram::new(points).expect("valid points"))
}

/// Persistence diagram of a grid's sublevel filtration.
pub fn persistence_diagram(grid: &GrayscaleGrid) -> PersistenceDiagram {
    compute_persistence_fast(&build_filtration(grid)).expect("generated filtration is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GrayscaleGrid;
    use HomDim::*;

    fn pts(d: &PersistenceDiagram, dim: HomDim) -> Vec<(f64, f64)> {
        d.of_dim(dim).map(|p| (p.birth, p.death)).collect()
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn filtration_values_follow_max_rule() {
        let f = build_filtration(&GrayscaleGrid::from_rows(&[[3.0, 5.0]]));
        let seen: Vec<(CellKind, f64)> = f.cells().iter().map(|c| (c.kind, c.value)).collect();
        assert_eq!(
            seen,
            [(CellKind::Vertex, 3.0), (CellKind::Vertex, 5.0), (CellKind::HorizontalEdge, 5.0)]
        );

        let f = build_filtration(&GrayscaleGrid::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
        let square = f.cells().iter().find(|c| c.kind == CellKind::Square).unwrap();
        assert_eq!(square.value, 4.0);
        assert_eq!(f.len(), 9);

        let f = build_filtration(&GrayscaleGrid::new(3, 3, vec![6.0; 9]).unwrap());
        assert!(f.cells().iter().all(|c| c.value == 6.0));
        assert_eq!(f.len(), cell_count(3, 3));
        assert_eq!(f.len(), 9 + 12 + 4);
        f.validate().unwrap();
    }

    #[test]
    fn persistence_examples() {
        let d = compute_persistence(&build_filtration(&GrayscaleGrid::new(2, 2, vec![7.0; 4]).unwrap())).unwrap();
        assert_eq!(pts(&d, H0), [(7.0, INF)]);
        assert!(pts(&d, H1).is_empty());

        let d = compute_persistence(&build_filtration(&GrayscaleGrid::from_rows(&[[0.0, 2.0, 1.0]]))).unwrap();
        assert_eq!(pts(&d, H0), [(0.0, INF), (1.0, 2.0)]);
        assert!(pts(&d, H1).is_empty());

        let ring = GrayscaleGrid::from_rows(&[[1.0, 1.0, 1.0], [1.0, 9.0, 1.0], [1.0, 1.0, 1.0]]);
        let d = compute_persistence(&build_filtration(&ring)).unwrap();
        assert_eq!(pts(&d, H0), [(1.0, INF)]);
        assert_eq!(pts(&d, H1), [(1.0, 9.0)]);
    }

    #[test]
    fn union_find_examples() {
        let uf = |rows: &[[f64; 3]]| pair_h0_union_find(&build_filtration(&GrayscaleGrid::from_rows(rows)));
        assert_eq!(pts(&uf(&[[0.0, 2.0, 1.0]]), H0), [(0.0, INF), (1.0, 2.0)]);
        assert_eq!(pts(&uf(&[[0.0, 5.0, 0.0]]), H0), [(0.0, 5.0), (0.0, INF)]);
        let inc = pair_h0_union_find(&build_filtration(&GrayscaleGrid::from_rows(&[[0.0, 1.0, 2.0, 3.0]])));
        assert_eq!(pts(&inc, H0), [(0.0, INF)]);
    }

    #[test]
    fn fast_path_matches_full_reduction() {
        let g = GrayscaleGrid::from_rows(&[
            [5.0, 1.0, 5.0, 2.0],
            [1.0, 8.0, 1.0, 9.0],
            [5.0, 1.0, 5.0, 0.0],
        ]);
        let f = build_filtration(&g);
        assert_eq!(compute_persistence(&f).unwrap(), compute_persistence_fast(&f).unwrap());
    }

    #[test]
    fn rejects_invalid_orders() {
        let g = GrayscaleGrid::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let f = build_filtration(&g);
        let mut cells = f.cells().to_vec();
        // Move the square to the front: its faces no longer precede it.
        let sq = cells.iter().position(|c| c.kind == CellKind::Square).unwrap();
        let square = cells.remove(sq);
        cells.insert(0, square);
        let bad = CubicalFiltration::from_cells(2, 2, cells).unwrap();
        assert!(matches!(compute_persistence(&bad), Err(CubicalError::InvalidFiltration { .. })));

        // A face with a larger value than its coface.
        let mut cells = f.cells().to_vec();
        cells[0].value = 100.0;
        let bad = CubicalFiltration::from_cells(2, 2, cells).unwrap();
        assert!(bad.validate().is_err());

        let mut cells = f.cells().to_vec();
        cells.pop();
        assert!(CubicalFiltration::from_cells(2, 2, cells).is_err());
        let mut cells = f.cells().to_vec();
        cells[1] = cells[0];
        assert!(CubicalFiltration::from_cells(2, 2, cells).is_err());
    }

    #[test]
    fn single_pixel() {
        let d = persistence_diagram(&GrayscaleGrid::from_rows(&[[4.0]]));
        assert_eq!(pts(&d, H0), [(4.0, INF)]);
    }
}
