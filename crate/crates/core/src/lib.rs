//! Rough Mount Fuji accessibility percolation.
//!
//! Fitness of a vertex is `omega(v) = eta(v) + c * d(v)` with i.i.d. labels
//! `eta` and drift `c`; a path is accessible when fitness strictly increases
//! along it. This crate provides the graph families (oriented hypercube,
//! n-ary trees, regular trees, the directed lattices `L2` and `L2alt`),
//! deterministic per-vertex fitness and site fields, the coupling between
//! them, exact path counting, and the Monte Carlo survival harness.

pub mod analysis;
pub mod distributions;
mod error;
pub mod fields;
pub mod graphs;
pub mod hashing;
pub mod paths;

pub use distributions::{Distribution, IntervalMass};
pub use error::{Error, Result};
pub use fields::{Boundary, FitnessField, MergeSpec, SiteBoundary, SiteField, StepRule};
pub use graphs::{Family, LeveledDag, VertexKey};
pub use paths::{PathCount, PathMode, SurvivalOutcome, SurvivalResult};
