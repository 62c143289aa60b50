//! Turning query clusters into CTR-ranked product-type carousels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clustering::Partition;
use crate::graph::BipartiteGraph;

/// Reporting caps: top K clusters, top Z product-types per cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CarouselConfig {
    pub top_k: usize,
    pub top_z: usize,
}

impl Default for CarouselConfig {
    fn default() -> Self {
        CarouselConfig {
            top_k: 20,
            top_z: 5,
        }
    }
}

/// One ranked product-type recommendation inside a carousel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarouselItem {
    pub product_type: String,
    pub ctr: f64,
    pub clicks: u64,
    pub impressions: u64,
}

/// One aspect: a query cluster plus its CTR-ranked product-type list.
#[derive(Debug, Clone, PartialEq)]
pub struct Carousel {
    pub cluster_id: usize,
    /// 1-based position in the size ranking.
    pub size_rank: usize,
    pub member_queries: Vec<String>,
    /// Sorted by CTR descending (ties: more clicks, then product-type id).
    pub items: Vec<CarouselItem>,
}

/// Cluster-level click-through rate of one product-type.
///
/// Panics when the cluster is empty or has no impressions on `pt` (callers
/// pre-filter), and on out-of-range indices.
pub fn cluster_ctr(graph: &BipartiteGraph, query_cluster: &[usize], pt: usize) -> f64 {
    let stats = graph.aggregate_stats(query_cluster, &[pt]);
    assert!(
        stats.impressions >= 1,
        "cluster has no impressions on product-type {pt}"
    );
    stats.clicks as f64 / stats.impressions as f64
}

/// Builds the reported carousels for a query partition.
///
/// Non-noise clusters are ranked by member count descending (ties: more
/// aggregate clicks, then smaller cluster id); the top K are kept. Within a
/// carousel, product-types with at least one impression from the cluster are
/// ranked by CTR descending (ties: more clicks, then lexicographic id); the
/// top Z are kept.
pub fn build_carousels(
    graph: &BipartiteGraph,
    partition: &Partition,
    config: &CarouselConfig,
) -> Vec<Carousel> {
    assert_eq!(
        partition.num_nodes(),
        graph.num_queries(),
        "partition must cover side Q"
    );
    assert!(config.top_k >= 1 && config.top_z >= 1);

    struct Ranked {
        cluster_id: usize,
        members: Vec<usize>,
        total_clicks: u64,
        // product-type -> (impressions, clicks); BTreeMap keeps iteration
        // order deterministic.
        stats: BTreeMap<usize, (u64, u64)>,
    }

    let mut ranked: Vec<Ranked> = partition
        .non_noise_clusters()
        .into_iter()
        .map(|(cluster_id, members)| {
            let mut stats: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
            let mut total_clicks = 0;
            for &q in &members {
                for e in graph.query_edges(q) {
                    let slot = stats.entry(e.node).or_insert((0, 0));
                    slot.0 += e.impressions;
                    slot.1 += e.clicks;
                    total_clicks += e.clicks;
                }
            }
            Ranked {
                cluster_id,
                members,
                total_clicks,
                stats,
            }
        })
        .collect();

    ranked.sort_by(|a, b| {
        b.members
            .len()
            .cmp(&a.members.len())
            .then(b.total_clicks.cmp(&a.total_clicks))
            .then(a.cluster_id.cmp(&b.cluster_id))
    });
    ranked.truncate(config.top_k);

    ranked
        .into_iter()
        .enumerate()
        .map(|(pos, cluster)| {
            let mut items: Vec<CarouselItem> = cluster
                .stats
                .iter()
                .filter(|(_, &(imp, _))| imp >= 1)
                .map(|(&pt, &(impressions, clicks))| CarouselItem {
                    product_type: graph.product_types()[pt].clone(),
                    ctr: clicks as f64 / impressions as f64,
                    clicks,
                    impressions,
                })
                .collect();
            items.sort_by(|a, b| {
                b.ctr
                    .total_cmp(&a.ctr)
                    .then(b.clicks.cmp(&a.clicks))
                    .then(a.product_type.cmp(&b.product_type))
            });
            items.truncate(config.top_z);
            Carousel {
                cluster_id: cluster.cluster_id,
                size_rank: pos + 1,
                member_queries: cluster
                    .members
                    .iter()
                    .map(|&q| graph.queries()[q].clone())
                    .collect(),
                items,
            }
        })
        .collect()
}

/// On-disk JSON schema for a carousel run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CarouselsFile {
    pub event: String,
    pub generated_at: Option<String>,
    pub config: CarouselsFileConfig,
    pub carousels: Vec<CarouselEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CarouselsFileConfig {
    pub k: usize,
    pub z: usize,
    pub tau: f64,
    pub mode: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CarouselEntry {
    pub rank: usize,
    pub queries: Vec<String>,
    pub items: Vec<CarouselItem>,
}

impl CarouselsFile {
    pub fn new(
        event: &str,
        generated_at: Option<String>,
        k: usize,
        z: usize,
        tau: f64,
        mode: &str,
        carousels: &[Carousel],
    ) -> Self {
        CarouselsFile {
            event: event.to_string(),
            generated_at,
            config: CarouselsFileConfig {
                k,
                z,
                tau,
                mode: mode.to_string(),
            },
            carousels: carousels
                .iter()
                .map(|c| CarouselEntry {
                    rank: c.size_rank,
                    queries: c.member_queries.clone(),
                    items: c.items.clone(),
                })
                .collect(),
        }
    }

    /// Reconstructs in-memory carousels (cluster ids are ranks here).
    pub fn to_carousels(&self) -> Vec<Carousel> {
        self.carousels
            .iter()
            .map(|entry| Carousel {
                cluster_id: entry.rank,
                size_rank: entry.rank,
                member_queries: entry.queries.clone(),
                items: entry.items.clone(),
            })
            .collect()
    }
}
