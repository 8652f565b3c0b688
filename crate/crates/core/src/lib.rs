//! Geometry of labeled embedding spaces.
//!
//! The crate partitions labeled points into label-pure clusters whose convex
//! hulls are pairwise disjoint, measures max-margin distances between those
//! clusters and tracks how the distances evolve across snapshots of a
//! representation. A small two-hidden-layer classifier probe is included for
//! comparison with the geometric view.

pub mod analytics;
pub mod clustering;
pub mod dataset;
pub mod error;
pub mod probe;
pub mod separability;

pub use clustering::{cluster, Cluster, ClusterSet};
pub use dataset::{load_point_set, load_series, LabeledPointSet, SeriesAxis, SnapshotSeries};
pub use error::{Error, OverlapPair, Result};
pub use separability::{hull_distance, is_separable, max_margin_separator, Hyperplane, SeparabilityConfig};
