//! Pixel grids, sublevel thresholding, a brute-force Betti oracle and a
//! seeded synthetic shape generator.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::union_find::DisjointSet;

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("invalid grid shape {height}x{width} for {len} values")]
    Shape { height: usize, width: usize, len: usize },
    #[error("non-finite pixel value at index {0}")]
    NonFinite(usize),
    #[error("malformed {field}: {reason}")]
    Format { field: &'static str, reason: String },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_err(field: &'static str, reason: impl Into<String>) -> GridError {
    GridError::Format { field, reason: reason.into() }
}

/// A single-channel image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayscaleGrid {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl GrayscaleGrid {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self, GridError> {
        if height == 0 || width == 0 || height.checked_mul(width) != Some(values.len()) {
            return Err(GridError::Shape { height, width, len: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { height, width, values })
    }

    /// Builds a grid from nested rows. Panics on ragged input; meant for
    /// literals in tests and examples.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * width);
        for row in rows {
            assert_eq!(row.as_ref().len(), width, "ragged rows");
            values.extend_from_slice(row.as_ref());
        }
        Self::new(rows.len(), width, values).expect("valid literal grid")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies `f` to every pixel.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        Self::new(self.height, self.width, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Mirrors the grid left to right.
    pub fn flip_horizontal(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for row in self.values.chunks(self.width) {
            values.extend(row.iter().rev());
        }
        Self { values, ..*self }
    }

    /// Distinct pixel values in increasing order.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Encodes as binary PGM (P5, maxval 255). Every pixel must be an
    /// integer in 0..=255.
    pub fn to_pgm(&self) -> Result<Vec<u8>, GridError> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for &v in &self.values {
            if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
                return Err(format_err("pixel", format!("{v} is not an 8-bit value")));
            }
            out.push(v as u8);
        }
        Ok(out)
    }

    /// Encodes as CSV, one image row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Boolean mask with the shape of its source grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGrid {
    height: usize,
    width: usize,
    mask: Vec<bool>,
}

impl BinaryGrid {
    pub fn new(height: usize, width: usize, mask: Vec<bool>) -> Result<Self, GridError> {
        if height == 0 || width == 0 || height.checked_mul(width) != Some(mask.len()) {
            return Err(GridError::Shape { height, width, len: mask.len() });
        }
        Ok(Self { height, width, mask })
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mask = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.as_ref().len(), width, "ragged rows");
                r.as_ref().iter().map(|&b| b != 0)
            })
            .collect();
        Self::new(height, width, mask).expect("valid literal mask")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryGrid) -> bool {
        self.height == other.height
            && self.width == other.width
            && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }
}

/// The sublevel set `{p : values[p] <= tau}`.
pub fn sublevel_mask(grid: &GrayscaleGrid, tau: f64) -> BinaryGrid {
    BinaryGrid {
        height: grid.height,
        width: grid.width,
        mask: grid.values.iter().map(|&v| v <= tau).collect(),
    }
}

/// Cell counts of the V-construction complex spanned by a mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellCounts {
    pub vertices: usize,
    pub edges: usize,
    pub squares: usize,
}

impl CellCounts {
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.squares as i64
    }
}

pub fn cell_counts(mask: &BinaryGrid) -> CellCounts {
    let (h, w) = (mask.height, mask.width);
    let mut counts = CellCounts { vertices: 0, edges: 0, squares: 0 };
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) {
                continue;
            }
            counts.vertices += 1;
            let right = c + 1 < w && mask.get(r, c + 1);
            let down = r + 1 < h && mask.get(r + 1, c);
            counts.edges += right as usize + down as usize;
            if right && down && mask.get(r + 1, c + 1) {
                counts.squares += 1;
            }
        }
    }
    counts
}

/// Betti numbers `(beta0, beta1)` of the V-construction complex of `mask`.
///
/// `beta0` comes from a breadth-first flood fill over 4-neighbours and
/// `beta1` from the Euler characteristic, `beta1 = beta0 - (V - E + F)`.
pub fn betti_oracle(mask: &BinaryGrid) -> (usize, usize) {
    let beta0 = count_components_flood_fill(mask);
    let chi = cell_counts(mask).euler_characteristic();
    let beta1 = beta0 as i64 - chi;
    debug_assert!(beta1 >= 0, "negative beta1 from chi = {chi}");
    (beta0, beta1 as usize)
}

pub fn count_components_flood_fill(mask: &BinaryGrid) -> usize {
    let (h, w) = (mask.height, mask.width);
    let mut seen = vec![false; h * w];
    let mut queue = VecDeque::new();
    let mut components = 0;
    for start in 0..h * w {
        if !mask.mask[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            let (r, c) = (p / w, p % w);
            let mut visit = |q: usize| {
                if mask.mask[q] && !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            };
            if r > 0 {
                visit(p - w);
            }
            if r + 1 < h {
                visit(p + w);
            }
            if c > 0 {
                visit(p - 1);
            }
            if c + 1 < w {
                visit(p + 1);
            }
        }
    }
    components
}

/// Component count by a union-find pass over right/down edges.
pub fn count_components_union_find(mask: &BinaryGrid) -> usize {
    let (h, w) = (mask.height, mask.width);
    let mut sets = DisjointSet::new(h * w);
    let mut components = mask.count();
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            if !mask.mask[p] {
                continue;
            }
            if c + 1 < w && mask.mask[p + 1] && sets.union(p as u32, p as u32 + 1) {
                components -= 1;
            }
            if r + 1 < h && mask.mask[p + w] && sets.union(p as u32, (p + w) as u32) {
                components -= 1;
            }
        }
    }
    components
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayscaleGrid, GridError> {
    parse_pgm(&std::fs::read(path)?)
}

/// Decodes a P2 (ASCII) or P5 (binary) PGM with maxval at most 255.
/// Pixel values are returned as read, without scaling by maxval.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayscaleGrid, GridError> {
    let mut cursor = PgmCursor { bytes, pos: 0 };
    let magic = cursor.token().ok_or_else(|| format_err("magic", "empty file"))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(format_err(
                "magic",
                format!("expected P2 or P5, found {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    let width = cursor.header_number("width")?;
    let height = cursor.header_number("height")?;
    let maxval = cursor.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(format_err("dimensions", format!("{width}x{height} image is empty")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(format_err("maxval", format!("{maxval} outside 1..=255")));
    }
    let len = width
        .checked_mul(height)
        .filter(|&n| n <= 1 << 30)
        .ok_or_else(|| format_err("dimensions", format!("{width}x{height} too large")))?;

    let values: Vec<f64> = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        match cursor.bytes.get(cursor.pos) {
            Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
            _ => return Err(format_err("header", "missing whitespace before raster")),
        }
        let raster = &cursor.bytes[cursor.pos..];
        if raster.len() < len {
            return Err(format_err(
                "payload",
                format!("expected {len} bytes, found {}", raster.len()),
            ));
        }
        raster[..len].iter().map(|&b| b as f64).collect()
    } else {
        let mut values = Vec::with_capacity(len);
        for i in 0..len {
            let tok = cursor
                .token()
                .ok_or_else(|| format_err("payload", format!("expected {len} samples, found {i}")))?;
            let v = parse_decimal(tok).ok_or_else(|| {
                format_err("payload", format!("sample {i} is not a number: {:?}", String::from_utf8_lossy(tok)))
            })?;
            values.push(v as f64);
        }
        values
    };
    if let Some((i, v)) = values.iter().enumerate().find(|(_, &v)| v > maxval as f64) {
        return Err(format_err("payload", format!("sample {i} = {v} exceeds maxval {maxval}")));
    }
    GrayscaleGrid::new(height, width, values)
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmCursor<'a> {
    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Option<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.bytes.get(self.pos) == Some(&b'#') {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn header_number(&mut self, field: &'static str) -> Result<usize, GridError> {
        let tok = self.token().ok_or_else(|| format_err(field, "missing"))?;
        parse_decimal(tok).ok_or_else(|| {
            format_err(field, format!("not a decimal integer: {:?}", String::from_utf8_lossy(tok)))
        })
    }
}

fn parse_decimal(tok: &[u8]) -> Option<usize> {
    if tok.is_empty() || tok.len() > 10 || !tok.iter().all(u8::is_ascii_digit) {
        return None;
    }
    std::str::from_utf8(tok).ok()?.parse().ok()
}

pub fn load_csv_grid(path: impl AsRef<Path>) -> Result<GrayscaleGrid, GridError> {
    parse_csv_grid(&std::fs::read_to_string(path)?)
}

/// Parses one image row per line, values separated by commas. Blank lines
/// are ignored.
pub fn parse_csv_grid(text: &str) -> Result<GrayscaleGrid, GridError> {
    let mut values = Vec::new();
    let mut width = None;
    let mut height = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                let cell = cell.trim();
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format_err("cell", format!("line {}: {cell:?}", lineno + 1)))
            })
            .collect::<Result<_, _>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(format_err(
                    "row",
                    format!("line {} has {} cells, expected {w}", lineno + 1, row.len()),
                ))
            }
            _ => {}
        }
        values.extend(row);
        height += 1;
    }
    GrayscaleGrid::new(height, width.unwrap_or(0), values)
}

/// Shape classes whose only difference is topological.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeClass {
    Disk,
    Annulus,
    TwoDisks,
}

impl ShapeClass {
    /// Betti numbers of the foreground.
    pub fn betti(self) -> (usize, usize) {
        match self {
            ShapeClass::Disk => (1, 0),
            ShapeClass::Annulus => (1, 1),
            ShapeClass::TwoDisks => (2, 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Disk => "disk",
            ShapeClass::Annulus => "annulus",
            ShapeClass::TwoDisks => "two_disks",
        }
    }
}

impl fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of the synthetic shape generator.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShapeSpec {
    pub classes: Vec<ShapeClass>,
    pub size: usize,
    /// Foreground (dark) intensity before noise.
    pub foreground: u8,
    /// Background (bright) intensity before noise.
    pub background: u8,
    /// Half-width of the uniform integer noise added to every pixel.
    pub noise: u8,
}

impl Default for ShapeSpec {
    fn default() -> Self {
        Self {
            classes: vec![ShapeClass::Disk, ShapeClass::Annulus, ShapeClass::TwoDisks],
            size: 64,
            foreground: 40,
            background: 200,
            noise: 15,
        }
    }
}

impl ShapeSpec {
    /// A threshold separating foreground from background for any noise draw.
    pub fn mid_threshold(&self) -> f64 {
        (self.foreground as f64 + self.background as f64) / 2.0
    }

    fn validate(&self) -> Result<(), GridError> {
        if self.size < 32 {
            return Err(GridError::Config(format!("size {} is below 32", self.size)));
        }
        if self.classes.is_empty() {
            return Err(GridError::Config("no shape classes".into()));
        }
        let gap = self.background as i32 - self.foreground as i32;
        if gap <= 0 || 2 * self.noise as i32 >= gap {
            return Err(GridError::Config(format!(
                "noise {} does not keep foreground {} and background {} apart",
                self.noise, self.foreground, self.background
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub image: GrayscaleGrid,
    pub label: usize,
}

/// Generates `n` images; sample `i` has label `i % classes.len()`.
///
/// Every class draws the same foreground area, so classes differ in their
/// component and loop counts rather than in mass.
pub fn generate_shapes(seed: u64, n: usize, spec: &ShapeSpec) -> Result<Vec<SyntheticSample>, GridError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| {
            let label = i % spec.classes.len();
            let image = render_shape(&mut rng, spec.classes[label], spec);
            SyntheticSample { image, label }
        })
        .collect())
}

enum Region {
    Disk { cy: f64, cx: f64, r: f64 },
    Ring { cy: f64, cx: f64, inner: f64, outer: f64 },
}

impl Region {
    fn contains(&self, y: f64, x: f64) -> bool {
        match *self {
            Region::Disk { cy, cx, r } => (y - cy).hypot(x - cx) <= r,
            Region::Ring { cy, cx, inner, outer } => {
                let d = (y - cy).hypot(x - cx);
                d > inner && d <= outer
            }
        }
    }
}

fn render_shape(rng: &mut ChaCha8Rng, class: ShapeClass, spec: &ShapeSpec) -> GrayscaleGrid {
    let size = spec.size as f64;
    // Radius of a disk with the shared foreground area.
    let equiv = rng.gen_range(0.10..0.14) * size;
    let center = |rng: &mut ChaCha8Rng, extent: f64| {
        let margin = extent + 2.0;
        (rng.gen_range(margin..size - margin), rng.gen_range(margin..size - margin))
    };
    let regions = match class {
        ShapeClass::Disk => {
            let (cy, cx) = center(rng, equiv);
            vec![Region::Disk { cy, cx, r: equiv }]
        }
        ShapeClass::Annulus => {
            let inner = rng.gen_range(0.40..0.55) * equiv;
            let outer = (equiv * equiv + inner * inner).sqrt();
            let (cy, cx) = center(rng, outer);
            vec![Region::Ring { cy, cx, inner, outer }]
        }
        ShapeClass::TwoDisks => {
            let r = equiv / std::f64::consts::SQRT_2;
            let (a, b) = loop {
                let a = center(rng, r);
                let b = center(rng, r);
                if (a.0 - b.0).hypot(a.1 - b.1) > 2.0 * r + 3.0 {
                    break (a, b);
                }
            };
            vec![Region::Disk { cy: a.0, cx: a.1, r }, Region::Disk { cy: b.0, cx: b.1, r }]
        }
    };
    let noise = spec.noise as i32;
    let mut values = Vec::with_capacity(spec.size * spec.size);
    for row in 0..spec.size {
        for col in 0..spec.size {
            let (y, x) = (row as f64 + 0.5, col as f64 + 0.5);
            let base = if regions.iter().any(|g| g.contains(y, x)) {
                spec.foreground
            } else {
                spec.background
            };
            let jitter = if noise > 0 { rng.gen_range(-noise..=noise) } else { 0 };
            values.push((base as i32 + jitter).clamp(0, 255) as f64);
        }
    }
    GrayscaleGrid::new(spec.size, spec.size, values).expect("square grid")
}
