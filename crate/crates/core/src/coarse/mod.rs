//! Coarse tri-state labels derived from point annotations: a Voronoi label
//! (point disks positive, cell ridges negative) and a cluster label (k-means
//! over color and distance-to-point features, cleaned up morphologically).

mod cluster;
mod distance;
mod kmeans;
pub mod morphology;
mod nearest;
mod voronoi;

pub use cluster::{classify_clusters, cluster_label, kmeans_features, refine, ClusterConfig};
pub use distance::{distance_map, DistanceMap};
pub use kmeans::{kmeans, Features, KMeansConfig, KMeansResult};
pub use nearest::NearestPoint;
pub use voronoi::{ridge_mask, voronoi_cells, voronoi_label, VoronoiConfig};
