//! Clustering: the hierarchical kernel, the iterative driver, and the
//! single-round baselines.

mod dbscan;
mod driver;
mod hc;
mod partition;

pub use dbscan::{dbscan, DbscanOutcome};
pub use driver::{cluster_baseline, iterate_clustering, ClusteringConfig, IcOutcome, Mode};
pub use hc::{euclidean_distance, hc_round, TIE_TOLERANCE};
pub use partition::{Partition, PartitionFile, Side};
