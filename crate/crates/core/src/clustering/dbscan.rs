//! Density-based clustering baseline.
//!
//! Core points (at least `min_samples` neighbours within `eps`, the point
//! itself included) are grouped into connected components of the eps-graph;
//! non-core points within `eps` of a core join the cluster of their nearest
//! core point (ties to the smaller index), everything else is noise. Border
//! assignment by nearest core rather than discovery order keeps the result
//! invariant to input order.

use rayon::prelude::*;

use super::hc::euclidean_distance;
use crate::weighting::SparseVector;

/// Clusters plus noise point indices, both in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbscanOutcome {
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so representatives are stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

const PARALLEL_CUTOFF: usize = 64;

/// Runs DBSCAN over the vectors with euclidean distance.
pub fn dbscan(vectors: &[SparseVector], eps: f64, min_samples: usize) -> DbscanOutcome {
    assert!(eps > 0.0 && eps.is_finite(), "eps must be positive");
    assert!(min_samples >= 1, "min_samples must be at least 1");
    let n = vectors.len();
    if n == 0 {
        return DbscanOutcome {
            clusters: Vec::new(),
            noise: Vec::new(),
        };
    }

    let neighbour_count = |i: usize| -> usize {
        (0..n)
            .filter(|&j| j == i || euclidean_distance(&vectors[i], &vectors[j]) <= eps)
            .count()
    };
    let core: Vec<bool> = if n < PARALLEL_CUTOFF {
        (0..n).map(|i| neighbour_count(i) >= min_samples).collect()
    } else {
        (0..n)
            .into_par_iter()
            .map(|i| neighbour_count(i) >= min_samples)
            .collect()
    };
    let core_idx: Vec<usize> = (0..n).filter(|&i| core[i]).collect();

    // Components over core points.
    let core_links = |&i: &usize| -> Vec<usize> {
        core_idx
            .iter()
            .copied()
            .filter(|&j| j > i && euclidean_distance(&vectors[i], &vectors[j]) <= eps)
            .collect()
    };
    let links: Vec<Vec<usize>> = if core_idx.len() < PARALLEL_CUTOFF {
        core_idx.iter().map(core_links).collect()
    } else {
        core_idx.par_iter().map(core_links).collect()
    };
    let mut uf = UnionFind::new(n);
    for (k, &i) in core_idx.iter().enumerate() {
        for &j in &links[k] {
            uf.union(i, j);
        }
    }
    let mut root_of = vec![usize::MAX; n];
    for &i in &core_idx {
        root_of[i] = uf.find(i);
    }

    // Border points join the nearest core's cluster.
    let nearest_core = |i: usize| -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for &j in &core_idx {
            let d = euclidean_distance(&vectors[i], &vectors[j]);
            if d <= eps {
                let better = match best {
                    None => true,
                    Some((bd, bj)) => match d.total_cmp(&bd) {
                        std::cmp::Ordering::Less => true,
                        std::cmp::Ordering::Greater => false,
                        std::cmp::Ordering::Equal => j < bj,
                    },
                };
                if better {
                    best = Some((d, j));
                }
            }
        }
        best.map(|(_, j)| root_of[j])
    };
    let assignment: Vec<Option<usize>> = if n < PARALLEL_CUTOFF {
        (0..n)
            .map(|i| {
                if core[i] {
                    Some(root_of[i])
                } else {
                    nearest_core(i)
                }
            })
            .collect()
    } else {
        (0..n)
            .into_par_iter()
            .map(|i| {
                if core[i] {
                    Some(root_of[i])
                } else {
                    nearest_core(i)
                }
            })
            .collect()
    };

    let mut position: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut noise = Vec::new();
    for (i, root) in assignment.iter().enumerate() {
        match root {
            Some(r) => {
                let pos = *position.entry(*r).or_insert_with(|| {
                    clusters.push(Vec::new());
                    clusters.len() - 1
                });
                clusters[pos].push(i);
            }
            None => noise.push(i),
        }
    }
    DbscanOutcome { clusters, noise }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(dim: usize, entries: &[(usize, f64)]) -> SparseVector {
        SparseVector::new(dim, entries.to_vec())
    }

    #[test]
    fn two_points_cannot_reach_density() {
        let v = sv(1, &[(0, 1.0)]);
        let out = dbscan(&[v.clone(), v], 0.5, 3);
        assert!(out.clusters.is_empty());
        assert_eq!(out.noise, vec![0, 1]);
    }

    #[test]
    fn five_colocated_plus_outlier() {
        let near = sv(2, &[(0, 1.0)]);
        let far = sv(2, &[(1, 100.0)]);
        let mut vs = vec![near.clone(), near.clone(), near.clone(), near.clone(), near];
        vs.push(far);
        let out = dbscan(&vs, 0.5, 3);
        assert_eq!(out.clusters, vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(out.noise, vec![5]);
    }

    #[test]
    fn border_point_attaches_to_nearest_core() {
        // Three tight points form a core cluster; the fourth has too few
        // neighbours to be core but sits within eps of core point 2.
        let vs = vec![
            sv(1, &[(0, 1.000)]),
            sv(1, &[(0, 1.010)]),
            sv(1, &[(0, 1.020)]),
            sv(1, &[(0, 1.095)]),
        ];
        let out = dbscan(&vs, 0.08, 3);
        assert_eq!(out.clusters, vec![vec![0, 1, 2, 3]]);
        assert!(out.noise.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Cluster structure is invariant to input order up to relabeling.
        #[test]
        fn order_invariant(seed in 0u64..2000) {
            use rand::seq::SliceRandom;
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 14;
            let vectors: Vec<SparseVector> = (0..n)
                .map(|_| {
                    let mut entries: Vec<(usize, f64)> = Vec::new();
                    for d in 0..3 {
                        if rng.random_bool(0.8) {
                            entries.push((d, rng.random_range(0.1..3.0)));
                        }
                    }
                    SparseVector::new(3, entries)
                })
                .collect();
            let eps = rng.random_range(0.3..2.0);
            let base = dbscan(&vectors, eps, 3);

            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let shuffled: Vec<SparseVector> = perm.iter().map(|&i| vectors[i].clone()).collect();
            let moved = dbscan(&shuffled, eps, 3);

            // Map the shuffled result back onto original indices.
            let mut back_clusters: Vec<Vec<usize>> = moved
                .clusters
                .iter()
                .map(|c| {
                    let mut m: Vec<usize> = c.iter().map(|&i| perm[i]).collect();
                    m.sort_unstable();
                    m
                })
                .collect();
            back_clusters.sort_by_key(|c| c[0]);
            let mut back_noise: Vec<usize> = moved.noise.iter().map(|&i| perm[i]).collect();
            back_noise.sort_unstable();

            prop_assert_eq!(back_clusters, base.clusters);
            prop_assert_eq!(back_noise, base.noise);
        }
    }
}
