//! Selective inference for top-k predictive pattern mining.
//!
//! The crate discovers the itemsets most associated with a continuous
//! response and attaches p-values that account for the fact that the
//! patterns were picked by looking at the same data. The selection event of
//! each mining mode is a polyhedron in response space; conditioning on it
//! turns the null distribution of a linear statistic into a truncated normal
//! whose end points are found by a pruned search over the itemset tree.
//!
//! Everything here is `no_std` (with `alloc`). File formats, the experiment
//! harness and the command line live in the `selpat` crate.

#![no_std]

extern crate alloc;

pub mod bits;
pub mod dataset;
pub mod error;
pub mod event;
pub mod inference;
pub mod linalg;
pub mod miner;
pub mod normal;
pub mod tree;
pub mod truncation;

pub use bits::OccurrenceVector;
pub use dataset::{Pattern, SigmaSource, TransactionDatabase};
pub use error::{Error, Result};
pub use event::{EventSpec, HalfSpace};
pub use inference::{InferenceReport, Method, PatternRecord};
pub use miner::{DiscoveryResult, Mode, Selected, Sign};
pub use normal::TruncatedNormal;
pub use tree::{Enumerator, ItemsetTree, TraversalStats, Visit};
pub use truncation::{LineQuery, SearchOptions, SearchStats, TruncationInterval};
