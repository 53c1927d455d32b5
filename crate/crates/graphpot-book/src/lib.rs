//! Doctest shim for the book: every fenced Rust block in `book/src`
//! runs under `cargo test --doc -p graphpot-book`, so the guide cannot
//! drift from the library. One module per chapter keeps failures
//! attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/weighted-graphs.md")]
pub mod weighted_graphs {}

#[doc = include_str!("../../../book/src/generators-and-windows.md")]
pub mod generators_and_windows {}

#[doc = include_str!("../../../book/src/intrinsic-metrics.md")]
pub mod intrinsic_metrics {}

#[doc = include_str!("../../../book/src/potential-theory.md")]
pub mod potential_theory {}

#[doc = include_str!("../../../book/src/liouville-criteria.md")]
pub mod liouville_criteria {}

#[doc = include_str!("../../../book/src/harmonic-maps.md")]
pub mod harmonic_maps {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
