//! Bayesian edge weights and cluster feature vectors.
//!
//! The edge weight is the point estimate
//! `sqrt((alpha + clk) / (beta + imp - clk) * (alpha + beta + imp + 1))`
//! computed over either a raw edge or a cluster-pair aggregate. A cluster's
//! feature vector has one coordinate per opposite-side cluster, holding the
//! weight of the aggregated statistics between the two clusters.

use std::collections::HashMap;

use crate::clustering::Partition;
use crate::error::{MineError, Result};
use crate::graph::BipartiteGraph;

/// Clamp keeping alpha strictly inside (0, 1); with beta = 1 - alpha this
/// keeps the weight denominator positive even on zero-data edges.
pub const ALPHA_EPSILON: f64 = 1e-6;

/// Prior click mass (alpha) and non-click mass (beta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorParams {
    alpha: f64,
    beta: f64,
}

impl PriorParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(MineError::Config(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(MineError::Config(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(PriorParams { alpha, beta })
    }

    /// `beta = 1 - alpha`, with alpha clamped into
    /// `[ALPHA_EPSILON, 1 - ALPHA_EPSILON]`.
    pub fn from_alpha(alpha: f64) -> Self {
        let alpha = alpha.clamp(ALPHA_EPSILON, 1.0 - ALPHA_EPSILON);
        PriorParams {
            alpha,
            beta: 1.0 - alpha,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// How the prior alpha is estimated from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaMode {
    /// Mean over product-types of each product-type's own CTR.
    #[default]
    PerProductType,
    /// Global ratio: total clicks / total impressions.
    Global,
}

impl AlphaMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlphaMode::PerProductType => "per-pt",
            AlphaMode::Global => "global",
        }
    }
}

/// Estimates the prior from the whole graph (per-product-type mean CTR).
pub fn estimate_prior(graph: &BipartiteGraph) -> PriorParams {
    estimate_prior_with(graph, AlphaMode::PerProductType)
}

pub fn estimate_prior_with(graph: &BipartiteGraph, mode: AlphaMode) -> PriorParams {
    let alpha = match mode {
        AlphaMode::PerProductType => {
            let mut sum = 0.0;
            for p in 0..graph.num_product_types() {
                let mut imp = 0u64;
                let mut clk = 0u64;
                for e in graph.pt_edges(p) {
                    imp += e.impressions;
                    clk += e.clicks;
                }
                // Every retained product-type has >= 1 impression.
                sum += clk as f64 / imp as f64;
            }
            sum / graph.num_product_types() as f64
        }
        AlphaMode::Global => {
            let mut imp = 0u64;
            let mut clk = 0u64;
            for p in 0..graph.num_product_types() {
                for e in graph.pt_edges(p) {
                    imp += e.impressions;
                    clk += e.clicks;
                }
            }
            clk as f64 / imp as f64
        }
    };
    PriorParams::from_alpha(alpha)
}

/// The Bayesian point-estimate weight of an edge or aggregate.
///
/// Strictly positive and strictly increasing in clicks for fixed
/// impressions. Panics when `clicks > impressions` (caller contract).
pub fn edge_weight(clicks: u64, impressions: u64, prior: &PriorParams) -> f64 {
    assert!(
        clicks <= impressions,
        "clicks {clicks} > impressions {impressions}"
    );
    let num = prior.alpha + clicks as f64;
    let den = prior.beta + (impressions - clicks) as f64;
    let factor = prior.alpha + prior.beta + impressions as f64 + 1.0;
    (num / den * factor).sqrt()
}

/// Sparse nonnegative vector; zero coordinates are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds a vector from (index, weight) pairs; entries are sorted and
    /// must be positive, in-range, and free of duplicate indices.
    pub fn new(dim: usize, mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|&(i, _)| i);
        for window in entries.windows(2) {
            assert!(
                window[0].0 != window[1].0,
                "duplicate index {}",
                window[0].0
            );
        }
        for &(i, w) in &entries {
            assert!(i < dim, "index {i} out of range (dim {dim})");
            assert!(
                w > 0.0 && w.is_finite(),
                "weight at {i} must be positive, got {w}"
            );
        }
        SparseVector { dim, entries }
    }

    pub fn empty(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }
}

/// Options for feature-vector construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VectorOptions {
    /// When set, cluster pairs without impressions get the prior-only weight
    /// (the literal zero-data estimate) instead of an absent entry.
    pub prior_on_missing: bool,
}

fn vector_from_stats(
    stats: &HashMap<usize, (u64, u64)>,
    dim: usize,
    prior: &PriorParams,
    opts: &VectorOptions,
) -> SparseVector {
    if opts.prior_on_missing {
        let fallback = edge_weight(0, 0, prior);
        let entries = (0..dim)
            .map(|j| match stats.get(&j) {
                Some(&(imp, clk)) if imp > 0 => (j, edge_weight(clk, imp, prior)),
                _ => (j, fallback),
            })
            .collect();
        return SparseVector::new(dim, entries);
    }
    let mut entries: Vec<(usize, f64)> = stats
        .iter()
        .filter(|(_, &(imp, _))| imp > 0)
        .map(|(&j, &(imp, clk))| (j, edge_weight(clk, imp, prior)))
        .collect();
    entries.sort_by_key(|&(i, _)| i);
    SparseVector { dim, entries }
}

/// Feature vector of one query cluster against the current product-type
/// partition: coordinate `j` is the weight of the aggregate statistics
/// between the cluster and product-type cluster `j`.
pub fn query_cluster_vector(
    graph: &BipartiteGraph,
    pt_partition: &Partition,
    cluster: &[usize],
    prior: &PriorParams,
    opts: &VectorOptions,
) -> SparseVector {
    assert!(!cluster.is_empty(), "empty query cluster");
    assert_eq!(pt_partition.num_nodes(), graph.num_product_types());
    let mut stats: HashMap<usize, (u64, u64)> = HashMap::new();
    for &q in cluster {
        for e in graph.query_edges(q) {
            let pc = pt_partition.cluster_of(e.node);
            let slot = stats.entry(pc).or_insert((0, 0));
            slot.0 += e.impressions;
            slot.1 += e.clicks;
        }
    }
    vector_from_stats(&stats, pt_partition.num_clusters(), prior, opts)
}

/// Mirror of [`query_cluster_vector`] with the sides swapped.
pub fn pt_cluster_vector(
    graph: &BipartiteGraph,
    query_partition: &Partition,
    cluster: &[usize],
    prior: &PriorParams,
    opts: &VectorOptions,
) -> SparseVector {
    assert!(!cluster.is_empty(), "empty product-type cluster");
    assert_eq!(query_partition.num_nodes(), graph.num_queries());
    let mut stats: HashMap<usize, (u64, u64)> = HashMap::new();
    for &p in cluster {
        for e in graph.pt_edges(p) {
            let qc = query_partition.cluster_of(e.node);
            let slot = stats.entry(qc).or_insert((0, 0));
            slot.0 += e.impressions;
            slot.1 += e.clicks;
        }
    }
    vector_from_stats(&stats, query_partition.num_clusters(), prior, opts)
}

/// Vectors for every query cluster in canonical id order (one graph pass).
pub fn query_cluster_vectors(
    graph: &BipartiteGraph,
    query_partition: &Partition,
    pt_partition: &Partition,
    prior: &PriorParams,
    opts: &VectorOptions,
) -> Vec<SparseVector> {
    assert_eq!(query_partition.num_nodes(), graph.num_queries());
    assert_eq!(pt_partition.num_nodes(), graph.num_product_types());
    let mut stats: Vec<HashMap<usize, (u64, u64)>> =
        vec![HashMap::new(); query_partition.num_clusters()];
    for q in 0..graph.num_queries() {
        let qc = query_partition.cluster_of(q);
        for e in graph.query_edges(q) {
            let pc = pt_partition.cluster_of(e.node);
            let slot = stats[qc].entry(pc).or_insert((0, 0));
            slot.0 += e.impressions;
            slot.1 += e.clicks;
        }
    }
    stats
        .iter()
        .map(|s| vector_from_stats(s, pt_partition.num_clusters(), prior, opts))
        .collect()
}

/// Vectors for every product-type cluster in canonical id order.
pub fn pt_cluster_vectors(
    graph: &BipartiteGraph,
    query_partition: &Partition,
    pt_partition: &Partition,
    prior: &PriorParams,
    opts: &VectorOptions,
) -> Vec<SparseVector> {
    assert_eq!(query_partition.num_nodes(), graph.num_queries());
    assert_eq!(pt_partition.num_nodes(), graph.num_product_types());
    let mut stats: Vec<HashMap<usize, (u64, u64)>> =
        vec![HashMap::new(); pt_partition.num_clusters()];
    for p in 0..graph.num_product_types() {
        let pc = pt_partition.cluster_of(p);
        for e in graph.pt_edges(p) {
            let qc = query_partition.cluster_of(e.node);
            let slot = stats[pc].entry(qc).or_insert((0, 0));
            slot.0 += e.impressions;
            slot.1 += e.clicks;
        }
    }
    stats
        .iter()
        .map(|s| vector_from_stats(s, query_partition.num_clusters(), prior, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Side;
    use crate::graph::build_graph;
    use crate::ingest::RawLogRow;
    use proptest::prelude::*;

    fn row(q: &str, p: &str, imp: u64, clk: u64) -> RawLogRow {
        RawLogRow {
            query: q.to_string(),
            product_type: p.to_string(),
            impressions: imp,
            clicks: clk,
        }
    }

    fn prior(alpha: f64, beta: f64) -> PriorParams {
        PriorParams::new(alpha, beta).unwrap()
    }

    #[test]
    fn estimate_prior_per_pt_mean() {
        // CTRs 0.2 and 0.4 -> alpha 0.3.
        let g = build_graph(&[row("q1", "p1", 10, 2), row("q2", "p2", 10, 4)]).unwrap();
        let p = estimate_prior(&g);
        assert!((p.alpha() - 0.3).abs() < 1e-12);
        assert!((p.beta() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn estimate_prior_clamps_zero() {
        let g = build_graph(&[row("q1", "p1", 10, 0)]).unwrap();
        let p = estimate_prior(&g);
        assert_eq!(p.alpha(), ALPHA_EPSILON);
        assert_eq!(p.beta(), 1.0 - ALPHA_EPSILON);
    }

    #[test]
    fn estimate_prior_single_pt() {
        let g = build_graph(&[row("q1", "p1", 10, 5)]).unwrap();
        let p = estimate_prior(&g);
        assert!((p.alpha() - 0.5).abs() < 1e-12);
        assert!((p.beta() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn estimate_prior_global_mode() {
        // Per-PT: mean(0.2, 0.4) = 0.3; global: 6/110 = 0.0545...
        let g = build_graph(&[row("q1", "p1", 10, 2), row("q2", "p2", 100, 40)]).unwrap();
        let per_pt = estimate_prior_with(&g, AlphaMode::PerProductType);
        let global = estimate_prior_with(&g, AlphaMode::Global);
        assert!((per_pt.alpha() - 0.3).abs() < 1e-12);
        assert!((global.alpha() - 42.0 / 110.0).abs() < 1e-12);
    }

    #[test]
    fn edge_weight_examples() {
        let p = prior(0.2, 0.8);
        assert!((edge_weight(0, 0, &p) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((edge_weight(10, 10, &p) - 153f64.sqrt()).abs() < 1e-12);
        let expected = (0.2 / 100.8 * 102.0f64).sqrt();
        assert!((edge_weight(0, 100, &p) - expected).abs() < 1e-12);
    }

    #[test]
    fn edge_weight_zero_data_closed_form() {
        let p = prior(0.3, 0.7);
        let closed = (p.alpha() / p.beta() * (p.alpha() + p.beta() + 1.0)).sqrt();
        assert_eq!(edge_weight(0, 0, &p), closed);
    }

    #[test]
    #[should_panic(expected = "clicks")]
    fn edge_weight_contract() {
        edge_weight(5, 3, &prior(0.2, 0.8));
    }

    #[test]
    fn sparse_vector_basics() {
        let v = SparseVector::new(4, vec![(2, 1.5), (0, 0.5)]);
        assert_eq!(v.dim(), 4);
        assert_eq!(v.entries(), &[(0, 0.5), (2, 1.5)]);
        assert_eq!(v.get(2), 1.5);
        assert_eq!(v.get(1), 0.0);
    }

    #[test]
    #[should_panic(expected = "positive")]
    fn sparse_vector_rejects_zero_weight() {
        SparseVector::new(2, vec![(0, 0.0)]);
    }

    fn two_pt_graph() -> BipartiteGraph {
        build_graph(&[
            row("q1", "p1", 10, 2),
            row("q2", "p1", 10, 2),
            row("q3", "p2", 8, 1),
        ])
        .unwrap()
    }

    #[test]
    fn query_vector_sparsity_and_value() {
        let g = two_pt_graph();
        let pt_singletons = Partition::singletons(Side::ProductType, g.num_product_types());
        let p = prior(0.2, 0.8);
        let v = query_cluster_vector(&g, &pt_singletons, &[0], &p, &VectorOptions::default());
        assert_eq!(v.dim(), 2);
        assert_eq!(v.nnz(), 1);
        // Aggregate (10, 2): sqrt((2.2/8.8) * 12) = sqrt(3).
        assert!((v.get(0) - 3f64.sqrt()).abs() < 1e-12);

        // Aggregating q1+q2 doubles the stats: (20, 4).
        let v2 = query_cluster_vector(&g, &pt_singletons, &[0, 1], &p, &VectorOptions::default());
        assert!((v2.get(0) - edge_weight(4, 20, &p)).abs() < 1e-15);
    }

    #[test]
    fn pt_vector_mirrors_query_vector() {
        let g = two_pt_graph();
        let q_singletons = Partition::singletons(Side::Query, g.num_queries());
        let p = prior(0.2, 0.8);
        let v = pt_cluster_vector(&g, &q_singletons, &[0], &p, &VectorOptions::default());
        assert_eq!(v.dim(), 3);
        assert_eq!(v.nnz(), 2);
        // Both q1 and q2 aggregate (10, 2) against p1.
        assert!((v.get(0) - 3f64.sqrt()).abs() < 1e-12);
        assert!((v.get(1) - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_impression_cluster_pair_yields_empty_vector() {
        // q2's only edge carries no impressions; its vector is empty but
        // keeps the dimension of the PT partition.
        let g = build_graph(&[row("q1", "p1", 10, 2), row("q2", "p1", 0, 0)]).unwrap();
        let pt_singletons = Partition::singletons(Side::ProductType, g.num_product_types());
        let p = prior(0.2, 0.8);
        let v = query_cluster_vector(&g, &pt_singletons, &[1], &p, &VectorOptions::default());
        assert_eq!(v.dim(), 1);
        assert_eq!(v.nnz(), 0);
    }

    #[test]
    fn prior_on_missing_densifies() {
        let g = two_pt_graph();
        let pt_singletons = Partition::singletons(Side::ProductType, g.num_product_types());
        let p = prior(0.2, 0.8);
        let opts = VectorOptions {
            prior_on_missing: true,
        };
        let v = query_cluster_vector(&g, &pt_singletons, &[0], &p, &opts);
        assert_eq!(v.nnz(), 2);
        assert_eq!(v.get(1), edge_weight(0, 0, &p));
    }

    #[test]
    fn bulk_vectors_match_per_cluster() {
        let g = two_pt_graph();
        let qpart = Partition::from_clusters(Side::Query, 3, &[vec![0, 1], vec![2]], &[]).unwrap();
        let ppart = Partition::singletons(Side::ProductType, g.num_product_types());
        let p = prior(0.2, 0.8);
        let opts = VectorOptions::default();
        let bulk = query_cluster_vectors(&g, &qpart, &ppart, &p, &opts);
        assert_eq!(bulk.len(), 2);
        assert_eq!(
            bulk[0],
            query_cluster_vector(&g, &ppart, &[0, 1], &p, &opts)
        );
        assert_eq!(bulk[1], query_cluster_vector(&g, &ppart, &[2], &p, &opts));
    }

    proptest! {
        // Strictly increasing in clicks for fixed impressions.
        #[test]
        fn weight_monotone_in_clicks(imp in 1u64..1000, alpha in 1e-6f64..0.999999) {
            let p = PriorParams::from_alpha(alpha);
            let mut last = edge_weight(0, imp, &p);
            for clk in 1..=imp.min(50) {
                let w = edge_weight(clk, imp, &p);
                prop_assert!(w > last, "w({clk}) = {w} <= w({}) = {last}", clk - 1);
                last = w;
            }
        }

        // Singleton aggregation is the identity: a singleton query against
        // singleton PT clusters reproduces raw per-edge weights.
        #[test]
        fn singleton_vectors_equal_edge_weights(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rows = Vec::new();
            for q in 0..4 {
                for p in 0..3 {
                    if rng.random_bool(0.7) {
                        let imp = rng.random_range(1..100u64);
                        let clk = rng.random_range(0..=imp);
                        rows.push(row(&format!("q{q}"), &format!("p{p}"), imp, clk));
                    }
                }
            }
            prop_assume!(!rows.is_empty());
            let Ok(g) = build_graph(&rows) else { return Ok(()); };
            let prior = estimate_prior(&g);
            let pt_singletons = Partition::singletons(Side::ProductType, g.num_product_types());
            for q in 0..g.num_queries() {
                let v = query_cluster_vector(&g, &pt_singletons, &[q], &prior, &VectorOptions::default());
                for e in g.query_edges(q) {
                    if e.impressions > 0 {
                        prop_assert_eq!(v.get(e.node), edge_weight(e.clicks, e.impressions, &prior));
                    } else {
                        prop_assert_eq!(v.get(e.node), 0.0);
                    }
                }
            }
        }
    }
}
