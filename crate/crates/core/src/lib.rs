//! Fixed-point and best-proximity-point iteration over pairs of closed convex
//! sets in R^d.
//!
//! The crate provides exact metric projections onto a small catalog of convex
//! sets ([`convex`]), von Neumann alternating projections ([`alternating`]),
//! relatively nonexpansive maps on `M ∪ N` ([`mappings`]), the Picard, Mann,
//! Ishikawa and projected / best-proximity iteration kernels with a traced run
//! loop ([`schemes`]), and comparison tables, property suites and CSV output
//! ([`harness`]). [`config`] holds the problem-file format used by the CLI.

pub mod alternating;
pub mod config;
pub mod convex;
pub mod error;
pub mod harness;
pub mod hilbert;
pub mod mappings;
pub mod schemes;

pub use convex::{ConvexSet, ConvexSetSpec, Region};
pub use error::{Error, Result};
pub use hilbert::Point;
pub use mappings::{MapKind, MapSpec, Problem};
pub use schemes::{RunOptions, RunReport, Schedule, SchemeSpec, StopReason, StopRule};

/// Seeded generator used by every sampler and property check.
pub type SampleRng = rand_chacha::ChaCha8Rng;
