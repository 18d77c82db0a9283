//! Topological features of grayscale images.
//!
//! The crate covers the numeric half of the pipeline: a pixel grid and its
//! sublevel sets ([`grid`]), the cubical filtration and its persistence
//! pairing ([`cubical`]), persistence-diagram preprocessing into fixed-size
//! point features ([`diagram`]), and classical diagram vectorizations
//! ([`vectorize`]).
//!
//! All cubical complexes use the V-construction: pixels are vertices, edges
//! join 4-adjacent pixels, and a square fills every 2x2 pixel block. The
//! brute-force Betti oracle in [`grid`] uses the same complex, so persistence
//! output can be checked against it threshold by threshold.

pub mod cubical;
pub mod diagram;
pub mod grid;
pub mod vectorize;
mod union_find;

pub use cubical::{build_filtration, compute_persistence, pair_h0_union_find, CubicalFiltration};
pub use diagram::{HomDim, NormalizationStats, PersistenceDiagram, PersistencePoint, PointFeatureMatrix};
pub use grid::{BinaryGrid, GrayscaleGrid};
