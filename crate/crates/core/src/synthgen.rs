//! Synthetic query-click logs with planted aspects.
//!
//! Each aspect gets disjoint query and product-type pools plus one
//! department. Queries click a configurable fraction of their own aspect's
//! product-types (the sparsity knob) and, optionally, stray onto foreign
//! product-types with a low CTR. The planted partition, the product-type
//! labels, and a certified merge threshold go into the ground-truth file.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clustering::{euclidean_distance, Partition, Side};
use crate::error::{MineError, Result};
use crate::evaluation::GroundTruth;
use crate::graph::build_graph;
use crate::ingest::RawLogRow;
use crate::weighting::{estimate_prior, query_cluster_vectors, VectorOptions};

/// Parameters of one synthetic log. Ranges are inclusive.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticSpec {
    pub num_aspects: usize,
    pub queries_per_aspect: (usize, usize),
    pub pts_per_aspect: (usize, usize),
    /// CTR range for own-aspect edges.
    pub within_aspect_ctr: (f64, f64),
    /// Probability of an edge to each foreign product-type.
    pub cross_aspect_edge_rate: f64,
    pub impressions_per_edge: (u64, u64),
    /// Fraction of its own aspect's product-types each query touches.
    pub query_pt_coverage: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(MineError::Config(msg));
        if self.num_aspects < 1 {
            return err("num_aspects must be at least 1".into());
        }
        if self.queries_per_aspect.0 < 1 || self.queries_per_aspect.0 > self.queries_per_aspect.1 {
            return err(format!(
                "bad queries_per_aspect range {:?}",
                self.queries_per_aspect
            ));
        }
        if self.pts_per_aspect.0 < 1 || self.pts_per_aspect.0 > self.pts_per_aspect.1 {
            return err(format!(
                "bad pts_per_aspect range {:?}",
                self.pts_per_aspect
            ));
        }
        let (lo, hi) = self.within_aspect_ctr;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return err(format!(
                "bad within_aspect_ctr range {:?}",
                self.within_aspect_ctr
            ));
        }
        if !(0.0..=1.0).contains(&self.cross_aspect_edge_rate) {
            return err(format!(
                "cross_aspect_edge_rate must be in [0,1], got {}",
                self.cross_aspect_edge_rate
            ));
        }
        if self.impressions_per_edge.0 < 1
            || self.impressions_per_edge.0 > self.impressions_per_edge.1
        {
            return err(format!(
                "impressions_per_edge must be a range of positive counts, got {:?}",
                self.impressions_per_edge
            ));
        }
        if !(self.query_pt_coverage > 0.0 && self.query_pt_coverage <= 1.0) {
            return err(format!(
                "query_pt_coverage must be in (0,1], got {}",
                self.query_pt_coverage
            ));
        }
        Ok(())
    }
}

/// First `k` elements of a seeded Fisher-Yates shuffle of `0..n`.
fn sample_indices(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}

/// Generates the log rows and ground truth for `spec`.
///
/// Deterministic for a fixed spec (ChaCha8 stream, fixed draw order: aspect
/// sizes first, then per query its own-aspect subset, per-edge CTR and
/// impressions, then one Bernoulli per foreign product-type).
pub fn generate(spec: &SyntheticSpec) -> Result<(Vec<RawLogRow>, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let aspect_queries: Vec<usize> = (0..spec.num_aspects)
        .map(|_| rng.random_range(spec.queries_per_aspect.0..=spec.queries_per_aspect.1))
        .collect();
    let aspect_pts: Vec<usize> = (0..spec.num_aspects)
        .map(|_| rng.random_range(spec.pts_per_aspect.0..=spec.pts_per_aspect.1))
        .collect();

    let total_pts: usize = aspect_pts.iter().sum();
    let pt_name = |global: usize| format!("pt{global:04}");
    let query_name = |global: usize| format!("ev q{global:05}");

    // Global id layout: aspect pools are contiguous.
    let mut pt_start = vec![0usize; spec.num_aspects];
    for g in 1..spec.num_aspects {
        pt_start[g] = pt_start[g - 1] + aspect_pts[g - 1];
    }
    let mut query_start = vec![0usize; spec.num_aspects];
    for g in 1..spec.num_aspects {
        query_start[g] = query_start[g - 1] + aspect_queries[g - 1];
    }

    let noise_ctr_max = spec.within_aspect_ctr.0 / 2.0;
    let mut rows: Vec<RawLogRow> = Vec::new();
    // Clicks realize the drawn rate exactly (rounded), so an edge's CTR is
    // the drawn CTR up to integer resolution.
    let draw_edge = |rng: &mut ChaCha8Rng, ctr_lo: f64, ctr_hi: f64| -> (u64, u64) {
        let ctr = if ctr_hi > ctr_lo {
            rng.random_range(ctr_lo..ctr_hi)
        } else {
            ctr_lo
        };
        let imp = rng.random_range(spec.impressions_per_edge.0..=spec.impressions_per_edge.1);
        let clk = ((ctr * imp as f64).round() as u64).min(imp);
        (imp, clk)
    };

    for g in 0..spec.num_aspects {
        let own = aspect_pts[g];
        let picks = ((spec.query_pt_coverage * own as f64).round() as usize).clamp(1, own);
        for q in 0..aspect_queries[g] {
            let query = query_name(query_start[g] + q);
            for local in sample_indices(&mut rng, own, picks) {
                let (imp, clk) =
                    draw_edge(&mut rng, spec.within_aspect_ctr.0, spec.within_aspect_ctr.1);
                rows.push(RawLogRow {
                    query: query.clone(),
                    product_type: pt_name(pt_start[g] + local),
                    impressions: imp,
                    clicks: clk,
                });
            }
            if spec.cross_aspect_edge_rate > 0.0 {
                for foreign in 0..total_pts {
                    if foreign >= pt_start[g] && foreign < pt_start[g] + own {
                        continue;
                    }
                    if rng.random::<f64>() < spec.cross_aspect_edge_rate {
                        let (imp, clk) = draw_edge(&mut rng, 0.0, noise_ctr_max);
                        rows.push(RawLogRow {
                            query: query.clone(),
                            product_type: pt_name(foreign),
                            impressions: imp,
                            clicks: clk,
                        });
                    }
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(MineError::Config("spec generated no edges".into()));
    }

    let event_product_types = (0..total_pts).map(pt_name).collect();
    let mut department_map = std::collections::BTreeMap::new();
    for g in 0..spec.num_aspects {
        for local in 0..aspect_pts[g] {
            department_map.insert(pt_name(pt_start[g] + local), format!("dept{g:02}"));
        }
    }
    let true_partition: Vec<Vec<String>> = (0..spec.num_aspects)
        .map(|g| {
            (0..aspect_queries[g])
                .map(|q| query_name(query_start[g] + q))
                .collect()
        })
        .collect();

    // Certification only makes sense for clean specs: with cross-aspect
    // noise or partial coverage the singleton-level gap is not positive, and
    // the all-pairs scan is quadratic in |Q|.
    let certified_tau = if spec.cross_aspect_edge_rate == 0.0 && spec.query_pt_coverage == 1.0 {
        let aspect_of: Vec<usize> = (0..spec.num_aspects)
            .flat_map(|g| std::iter::repeat_n(g, aspect_queries[g]))
            .collect();
        certify_tau(&rows, &aspect_of)?
    } else {
        None
    };

    let truth = GroundTruth {
        event_product_types,
        department_map,
        true_partition: Some(true_partition),
        certified_tau,
    };
    Ok((rows, truth))
}

/// Certifies a threshold separating the planted aspects at the singleton
/// feature-vector level: any tau strictly between the largest intra-aspect
/// and smallest inter-aspect pairwise distance recovers the aspects in one
/// average-linkage round. Returns None when the gap is not positive.
fn certify_tau(rows: &[RawLogRow], aspect_of: &[usize]) -> Result<Option<f64>> {
    let graph = build_graph(rows)?;
    if graph.num_queries() != aspect_of.len() {
        // A query lost all edges; certification would be misaligned.
        return Ok(None);
    }
    let prior = estimate_prior(&graph);
    let q_singletons = Partition::singletons(Side::Query, graph.num_queries());
    let p_singletons = Partition::singletons(Side::ProductType, graph.num_product_types());
    let vectors = query_cluster_vectors(
        &graph,
        &q_singletons,
        &p_singletons,
        &prior,
        &VectorOptions::default(),
    );

    let n = vectors.len();
    let (max_intra, min_inter) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut intra = f64::NEG_INFINITY;
            let mut inter = f64::INFINITY;
            for j in i + 1..n {
                let d = euclidean_distance(&vectors[i], &vectors[j]);
                if aspect_of[i] == aspect_of[j] {
                    intra = intra.max(d);
                } else {
                    inter = inter.min(d);
                }
            }
            (intra, inter)
        })
        .reduce(
            || (f64::NEG_INFINITY, f64::INFINITY),
            |a, b| (a.0.max(b.0), a.1.min(b.1)),
        );

    if max_intra.is_finite() && min_inter.is_finite() && max_intra < min_inter {
        Ok(Some(max_intra + 0.2 * (min_inter - max_intra)))
    } else {
        Ok(None)
    }
}
