//! Potential theory on weighted graphs.
//!
//! A weighted graph is a countable vertex set with a positive measure `m`
//! and symmetric edge weights `mu` with summable rows. This crate builds
//! the discrete machinery around harmonic functions of the formal
//! Laplacian `Δf(x) = (1/m(x)) Σ_y mu(x,y)(f(x) − f(y))`:
//!
//! * [`graph`]: the data model, Laplacian, energy form, norms, and
//!   harmonicity classification, in double precision or exact rationals;
//! * [`generate`]: windows of infinite families (lines, trees, the
//!   finite-volume counter-example line and its gluings);
//! * [`metric`]: intrinsic pseudo metrics: the path metric with degree
//!   lengths, truncations, balls, cut-off functions, compatibility
//!   certificates;
//! * [`potential`]: Dirichlet and Green solvers on exhaustions,
//!   capacity, recurrence diagnostics, Royden-type splitting, heat
//!   semigroup probes;
//! * [`liouville`]: Karp-type integral profiles, weighted `L^p` tests,
//!   Caccioppoli and key-estimate audits, mean-value inequalities,
//!   growth and moment classifiers;
//! * [`hadamard`] and [`hmap`]: CAT(0) targets (Euclidean, metric tree,
//!   Poincaré disk), barycenters, and harmonic maps by barycenter
//!   relaxation.
//!
//! Infinite graphs appear only as finite windows with explicit rims;
//! anything that would silently read beyond the window is an error. All
//! divergence-style verdicts are evidence extracted from finite data,
//! never proofs, and every audit reports both sides of its inequality.

pub mod error;
pub mod generate;
pub mod graph;
pub mod hadamard;
pub mod hmap;
pub mod io;
pub mod liouville;
pub mod metric;
pub mod potential;
pub mod weight;

pub use error::{Error, Result};
pub use graph::{
    ClassifyOutcome, GraphBuilder, Harmonicity, ScalarField, VertexId, WeightedGraph, WindowTag,
};
pub use metric::Metric;
