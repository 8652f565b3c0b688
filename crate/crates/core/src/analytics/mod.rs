//! Measurements on top of cluster sets: distance vectors, spatial
//! similarity, per-label minimum distances across snapshots, centroid
//! trajectories, cross-task deltas and PCA projections.

mod crosstask;
mod distances;
mod dynamics;
mod pca;
mod similarity;

pub use crosstask::{cross_task_report, from_min_distances, CrossTaskReport, LabelDelta, UNCHANGED_TOL};
pub use distances::{distance_matrix, distance_vector, min_distance_per_label, ClusterDistanceMatrix, DistanceVector};
pub use dynamics::{centroid_paths, difference_vectors, track_series, StepReport, TrackReport};
pub use pca::{pca_project, PcaProjection};
pub use similarity::{pearson, spatial_similarity};
