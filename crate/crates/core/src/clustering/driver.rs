//! Iterative clustering driver and the single-round baselines.

use crate::error::{MineError, Result};
use crate::graph::BipartiteGraph;
use crate::weighting::{pt_cluster_vectors, query_cluster_vectors, PriorParams, VectorOptions};

use super::dbscan::dbscan;
use super::hc::hc_round;
use super::partition::{Partition, Side};

/// Clustering algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Iterative clustering of query nodes only.
    Ic1,
    /// Iterative clustering of query and product-type nodes alternately.
    #[default]
    Ic2,
    /// One round of average-linkage clustering on singleton query vectors.
    Hc,
    /// Density-based baseline on singleton query vectors.
    Dbscan,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Ic1 => "ic1",
            Mode::Ic2 => "ic2",
            Mode::Hc => "hc",
            Mode::Dbscan => "dbscan",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ic1" | "ic-1" => Ok(Mode::Ic1),
            "ic2" | "ic-2" => Ok(Mode::Ic2),
            "hc" => Ok(Mode::Hc),
            "dbscan" => Ok(Mode::Dbscan),
            other => Err(MineError::Config(format!("unknown mode {other:?}"))),
        }
    }

    pub fn is_iterative(&self) -> bool {
        matches!(self, Mode::Ic1 | Mode::Ic2)
    }
}

/// Thresholds and limits for one clustering run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteringConfig {
    pub mode: Mode,
    /// Merge threshold for query-side rounds.
    pub tau_q: f64,
    /// Merge threshold for product-type rounds (IC-2 step 3).
    pub tau_p: f64,
    pub max_iterations: usize,
    pub dbscan_min_samples: usize,
    /// Give zero-impression cluster pairs the prior-only weight instead of
    /// an absent coordinate (ablation switch).
    pub prior_on_missing: bool,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            mode: Mode::default(),
            tau_q: 0.2,
            tau_p: 0.2,
            max_iterations: 50,
            dbscan_min_samples: 3,
            prior_on_missing: false,
        }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_q > 0.0 && self.tau_q.is_finite()) {
            return Err(MineError::Config(format!(
                "tau_q must be positive, got {}",
                self.tau_q
            )));
        }
        if !(self.tau_p > 0.0 && self.tau_p.is_finite()) {
            return Err(MineError::Config(format!(
                "tau_p must be positive, got {}",
                self.tau_p
            )));
        }
        if self.max_iterations < 1 {
            return Err(MineError::Config(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.dbscan_min_samples < 1 {
            return Err(MineError::Config(
                "dbscan min_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Result of an iterative clustering run.
#[derive(Debug, Clone)]
pub struct IcOutcome {
    pub query_partition: Partition,
    pub pt_partition: Partition,
    /// Outer iterations executed (the final one observes no change).
    pub iterations: usize,
    /// False when `max_iterations` stopped the loop instead.
    pub converged: bool,
}

/// Runs the iterative clustering loop (modes IC-1 and IC-2).
///
/// Each outer iteration rebuilds cluster feature vectors against the current
/// partitions, then runs one full hierarchical round per side (query side
/// always, product-type side in IC-2 only, using the vectors built before
/// the query round). Partitions only coarsen, so the loop terminates as soon
/// as an iteration changes nothing.
pub fn iterate_clustering(
    graph: &BipartiteGraph,
    prior: &PriorParams,
    config: &ClusteringConfig,
) -> Result<IcOutcome> {
    if !config.mode.is_iterative() {
        return Err(MineError::Config(format!(
            "iterate_clustering requires an IC mode, got {}",
            config.mode.as_str()
        )));
    }
    config.validate()?;
    let opts = VectorOptions {
        prior_on_missing: config.prior_on_missing,
    };

    let mut qpart = Partition::singletons(Side::Query, graph.num_queries());
    let mut ppart = Partition::singletons(Side::ProductType, graph.num_product_types());
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        iterations += 1;
        let qvecs = query_cluster_vectors(graph, &qpart, &ppart, prior, &opts);
        let pvecs = (config.mode == Mode::Ic2)
            .then(|| pt_cluster_vectors(graph, &qpart, &ppart, prior, &opts));

        let new_q = qpart.coarsen(&hc_round(&qvecs, config.tau_q));
        let new_p = match pvecs {
            Some(vecs) => ppart.coarsen(&hc_round(&vecs, config.tau_p)),
            None => ppart.clone(),
        };

        let unchanged = new_q == qpart && new_p == ppart;
        log::debug!(
            "iteration {iterations}: query clusters {} -> {}, pt clusters {} -> {}",
            qpart.num_clusters(),
            new_q.num_clusters(),
            ppart.num_clusters(),
            new_p.num_clusters()
        );
        qpart = new_q;
        ppart = new_p;
        if unchanged {
            converged = true;
            break;
        }
    }

    Ok(IcOutcome {
        query_partition: qpart,
        pt_partition: ppart,
        iterations,
        converged,
    })
}

/// Runs a single-round baseline (modes HC and DBSCAN) on singleton-level
/// query feature vectors.
pub fn cluster_baseline(
    graph: &BipartiteGraph,
    prior: &PriorParams,
    config: &ClusteringConfig,
) -> Result<Partition> {
    if config.mode.is_iterative() {
        return Err(MineError::Config(format!(
            "cluster_baseline requires mode hc or dbscan, got {}",
            config.mode.as_str()
        )));
    }
    config.validate()?;
    let opts = VectorOptions {
        prior_on_missing: config.prior_on_missing,
    };
    let q_singletons = Partition::singletons(Side::Query, graph.num_queries());
    let p_singletons = Partition::singletons(Side::ProductType, graph.num_product_types());
    let vectors = query_cluster_vectors(graph, &q_singletons, &p_singletons, prior, &opts);
    match config.mode {
        Mode::Hc => {
            let groups = hc_round(&vectors, config.tau_q);
            Partition::from_clusters(Side::Query, graph.num_queries(), &groups, &[])
        }
        Mode::Dbscan => {
            let out = dbscan(&vectors, config.tau_q, config.dbscan_min_samples);
            Partition::from_clusters(Side::Query, graph.num_queries(), &out.clusters, &out.noise)
        }
        Mode::Ic1 | Mode::Ic2 => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::ingest::RawLogRow;
    use crate::weighting::estimate_prior;

    fn row(q: &str, p: &str, imp: u64, clk: u64) -> RawLogRow {
        RawLogRow {
            query: q.to_string(),
            product_type: p.to_string(),
            impressions: imp,
            clicks: clk,
        }
    }

    fn config(mode: Mode, tau: f64) -> ClusteringConfig {
        ClusteringConfig {
            mode,
            tau_q: tau,
            tau_p: tau,
            ..ClusteringConfig::default()
        }
    }

    /// Two disjoint components: q0/q1 -> p0, q2/q3 -> p1, identical stats
    /// inside a component.
    fn two_component_graph() -> BipartiteGraph {
        build_graph(&[
            row("q0", "p0", 50, 10),
            row("q1", "p0", 50, 10),
            row("q2", "p1", 40, 4),
            row("q3", "p1", 40, 4),
        ])
        .unwrap()
    }

    #[test]
    fn identical_profiles_collapse_in_one_iteration() {
        let g = build_graph(&[
            row("a", "p0", 10, 2),
            row("b", "p0", 10, 2),
            row("c", "p0", 10, 2),
        ])
        .unwrap();
        let prior = estimate_prior(&g);
        let out = iterate_clustering(&g, &prior, &config(Mode::Ic1, 0.5)).unwrap();
        assert_eq!(out.query_partition.num_clusters(), 1);
        assert_eq!(out.iterations, 2);
        assert!(out.converged);
    }

    #[test]
    fn disjoint_components_stay_apart() {
        let g = two_component_graph();
        let prior = estimate_prior(&g);
        for mode in [Mode::Ic1, Mode::Ic2] {
            let out = iterate_clustering(&g, &prior, &config(mode, 0.5)).unwrap();
            assert!(out.converged);
            assert_eq!(out.query_partition.num_clusters(), 2, "mode {mode:?}");
            assert_eq!(out.query_partition.assignment(), &[0, 0, 1, 1]);
        }
    }

    #[test]
    fn single_pt_makes_ic1_and_ic2_agree() {
        let g = build_graph(&[
            row("a", "p0", 10, 2),
            row("b", "p0", 12, 2),
            row("c", "p0", 90, 70),
        ])
        .unwrap();
        let prior = estimate_prior(&g);
        let a = iterate_clustering(&g, &prior, &config(Mode::Ic1, 1.0)).unwrap();
        let b = iterate_clustering(&g, &prior, &config(Mode::Ic2, 1.0)).unwrap();
        assert_eq!(a.query_partition, b.query_partition);
    }

    #[test]
    fn ic1_first_iteration_matches_hc_baseline() {
        let g = two_component_graph();
        let prior = estimate_prior(&g);
        let mut cfg = config(Mode::Ic1, 0.7);
        cfg.max_iterations = 1;
        let ic = iterate_clustering(&g, &prior, &cfg).unwrap();
        let hc = cluster_baseline(&g, &prior, &config(Mode::Hc, 0.7)).unwrap();
        assert_eq!(ic.query_partition, hc);
        assert!(!ic.converged);
    }

    #[test]
    fn coarsening_only() {
        let g = build_graph(&[
            row("a", "p0", 30, 3),
            row("b", "p0", 31, 3),
            row("c", "p1", 40, 8),
            row("d", "p1", 41, 8),
            row("e", "p2", 50, 25),
        ])
        .unwrap();
        let prior = estimate_prior(&g);
        let mut previous = Partition::singletons(Side::Query, g.num_queries());
        for iters in 1..=6 {
            let mut cfg = config(Mode::Ic2, 2.0);
            cfg.max_iterations = iters;
            let out = iterate_clustering(&g, &prior, &cfg).unwrap();
            let current = out.query_partition;
            // Every cluster of the previous (finer) partition maps into one
            // cluster of the current partition.
            for cluster in previous.clusters() {
                let target = current.cluster_of(cluster[0]);
                assert!(cluster.iter().all(|&n| current.cluster_of(n) == target));
            }
            previous = current;
        }
    }

    #[test]
    fn determinism_across_runs() {
        let g = two_component_graph();
        let prior = estimate_prior(&g);
        let a = iterate_clustering(&g, &prior, &config(Mode::Ic2, 0.9)).unwrap();
        let b = iterate_clustering(&g, &prior, &config(Mode::Ic2, 0.9)).unwrap();
        assert_eq!(a.query_partition, b.query_partition);
        assert_eq!(a.pt_partition, b.pt_partition);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn dbscan_baseline_flags_noise() {
        // Five queries with identical profiles plus one oddball.
        let mut rows: Vec<RawLogRow> = (0..5).map(|i| row(&format!("q{i}"), "p0", 20, 5)).collect();
        rows.push(row("stray", "p1", 90, 1));
        let g = build_graph(&rows).unwrap();
        let prior = estimate_prior(&g);
        let part = cluster_baseline(&g, &prior, &config(Mode::Dbscan, 0.5)).unwrap();
        assert_eq!(part.num_clusters(), 2);
        assert_eq!(part.num_noise(), 1);
        assert!(part.is_noise(5));
    }

    #[test]
    fn mode_mismatch_is_config_error() {
        let g = two_component_graph();
        let prior = estimate_prior(&g);
        assert!(matches!(
            iterate_clustering(&g, &prior, &config(Mode::Hc, 0.5)),
            Err(MineError::Config(_))
        ));
        assert!(matches!(
            cluster_baseline(&g, &prior, &config(Mode::Ic1, 0.5)),
            Err(MineError::Config(_))
        ));
    }
}
