//! Partitions of one graph side into disjoint clusters.

use serde::{Deserialize, Serialize};

use crate::error::{MineError, Result};

/// Which side of the bipartite graph a partition covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Query,
    ProductType,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Query => "query",
            Side::ProductType => "product_type",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "query" => Ok(Side::Query),
            "product_type" => Ok(Side::ProductType),
            other => Err(MineError::Data(format!("unknown partition side {other:?}"))),
        }
    }
}

/// An assignment of every node on one side to exactly one cluster.
///
/// Cluster ids are canonical: walking nodes in index order, the cluster of
/// the smallest not-yet-labelled node gets the next id. Two partitions with
/// the same grouping therefore compare equal structurally.
///
/// DBSCAN noise points are kept as singleton clusters flagged per node, so
/// metrics over partitions stay total; carousel building skips them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    side: Side,
    assignment: Vec<usize>,
    num_clusters: usize,
    noise: Vec<bool>,
}

impl Partition {
    /// Every node in its own cluster (the round-zero state).
    pub fn singletons(side: Side, num_nodes: usize) -> Self {
        Partition {
            side,
            assignment: (0..num_nodes).collect(),
            num_clusters: num_nodes,
            noise: vec![false; num_nodes],
        }
    }

    /// Builds a partition from explicit clusters plus flagged noise nodes.
    ///
    /// `noise_nodes` must appear as singleton clusters or not at all (they
    /// are added as singletons when missing). Every node in `0..num_nodes`
    /// must be covered exactly once.
    pub fn from_clusters(
        side: Side,
        num_nodes: usize,
        clusters: &[Vec<usize>],
        noise_nodes: &[usize],
    ) -> Result<Self> {
        let mut assignment = vec![usize::MAX; num_nodes];
        let mut next = 0;
        for cluster in clusters {
            if cluster.is_empty() {
                return Err(MineError::Data("empty cluster in partition".into()));
            }
            for &node in cluster {
                if node >= num_nodes {
                    return Err(MineError::Data(format!(
                        "node {node} out of range (num_nodes {num_nodes})"
                    )));
                }
                if assignment[node] != usize::MAX {
                    return Err(MineError::Data(format!("node {node} assigned twice")));
                }
                assignment[node] = next;
            }
            next += 1;
        }
        let mut noise = vec![false; num_nodes];
        for &node in noise_nodes {
            if node >= num_nodes {
                return Err(MineError::Data(format!(
                    "noise node {node} out of range (num_nodes {num_nodes})"
                )));
            }
            noise[node] = true;
            if assignment[node] == usize::MAX {
                assignment[node] = next;
                next += 1;
            }
        }
        if let Some(missing) = assignment.iter().position(|&c| c == usize::MAX) {
            return Err(MineError::Data(format!("node {missing} not covered")));
        }
        let mut part = Partition {
            side,
            assignment,
            num_clusters: next,
            noise,
        };
        part.canonicalize();
        part.check_noise_singletons()?;
        Ok(part)
    }

    fn check_noise_singletons(&self) -> Result<()> {
        let sizes = self.cluster_sizes();
        for (node, &flag) in self.noise.iter().enumerate() {
            if flag && sizes[self.assignment[node]] != 1 {
                return Err(MineError::Data(format!(
                    "noise node {node} is not a singleton cluster"
                )));
            }
        }
        Ok(())
    }

    /// Relabels cluster ids by first occurrence in node order.
    fn canonicalize(&mut self) {
        let mut relabel = vec![usize::MAX; self.num_clusters];
        let mut next = 0;
        for &c in &self.assignment {
            if relabel[c] == usize::MAX {
                relabel[c] = next;
                next += 1;
            }
        }
        for c in self.assignment.iter_mut() {
            *c = relabel[*c];
        }
        self.num_clusters = next;
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn num_nodes(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn is_noise(&self, node: usize) -> bool {
        self.noise[node]
    }

    pub fn num_noise(&self) -> usize {
        self.noise.iter().filter(|&&n| n).count()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.num_clusters];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// All clusters in canonical id order, members ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    /// Clusters that are not flagged as noise, canonical order.
    pub fn non_noise_clusters(&self) -> Vec<(usize, Vec<usize>)> {
        self.clusters()
            .into_iter()
            .enumerate()
            .filter(|(_, members)| !self.noise[members[0]])
            .collect()
    }

    pub fn noise_nodes(&self) -> Vec<usize> {
        self.noise
            .iter()
            .enumerate()
            .filter_map(|(node, &flag)| flag.then_some(node))
            .collect()
    }

    /// Coarsens the partition by grouping its cluster ids.
    ///
    /// `groups` must cover `0..num_clusters` exactly once. Noise flags carry
    /// over unchanged (a noise singleton grouped with anything loses its
    /// flag, but the clustering driver never groups noise).
    pub fn coarsen(&self, groups: &[Vec<usize>]) -> Partition {
        let mut group_of = vec![usize::MAX; self.num_clusters];
        for (gid, group) in groups.iter().enumerate() {
            for &cid in group {
                assert!(
                    cid < self.num_clusters,
                    "group references unknown cluster {cid}"
                );
                assert!(group_of[cid] == usize::MAX, "cluster {cid} grouped twice");
                group_of[cid] = gid;
            }
        }
        assert!(
            group_of.iter().all(|&g| g != usize::MAX),
            "groups must cover every cluster"
        );
        let assignment: Vec<usize> = self.assignment.iter().map(|&c| group_of[c]).collect();
        let mut noise = self.noise.clone();
        for (node, flag) in noise.iter_mut().enumerate() {
            if *flag {
                let gid = group_of[self.assignment[node]];
                if groups[gid].len() > 1 {
                    *flag = false;
                }
            }
        }
        let mut part = Partition {
            side: self.side,
            assignment,
            num_clusters: groups.len(),
            noise,
        };
        part.canonicalize();
        part
    }

    /// Serializable form. `labels` (node index -> display string) is optional
    /// and lets downstream consumers align partitions across files.
    pub fn to_file(&self, labels: Option<&[String]>) -> PartitionFile {
        let clusters = self
            .non_noise_clusters()
            .into_iter()
            .map(|(_, members)| members)
            .collect();
        PartitionFile {
            side: self.side.as_str().to_string(),
            clusters,
            noise: self.noise_nodes(),
            labels: labels.map(|l| l.to_vec()),
        }
    }

    pub fn from_file(file: &PartitionFile) -> Result<(Partition, Option<Vec<String>>)> {
        let side = Side::parse(&file.side)?;
        let num_nodes = file.clusters.iter().map(Vec::len).sum::<usize>() + file.noise.len();
        let part = Partition::from_clusters(side, num_nodes, &file.clusters, &file.noise)?;
        Ok((part, file.labels.clone()))
    }
}

/// On-disk JSON schema for partitions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionFile {
    pub side: String,
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub labels: Option<Vec<String>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singletons_are_canonical() {
        let p = Partition::singletons(Side::Query, 3);
        assert_eq!(p.num_clusters(), 3);
        assert_eq!(p.assignment(), &[0, 1, 2]);
        assert_eq!(p.num_noise(), 0);
    }

    #[test]
    fn from_clusters_canonicalizes_ids() {
        // Clusters given out of node order still yield canonical ids.
        let p = Partition::from_clusters(Side::Query, 4, &[vec![2, 3], vec![0, 1]], &[]).unwrap();
        assert_eq!(p.assignment(), &[0, 0, 1, 1]);
        let q = Partition::from_clusters(Side::Query, 4, &[vec![0, 1], vec![2, 3]], &[]).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn coverage_errors() {
        assert!(Partition::from_clusters(Side::Query, 3, &[vec![0, 1]], &[]).is_err());
        assert!(Partition::from_clusters(Side::Query, 3, &[vec![0, 1], vec![1, 2]], &[]).is_err());
        assert!(Partition::from_clusters(Side::Query, 3, &[vec![0, 5], vec![1, 2]], &[]).is_err());
    }

    #[test]
    fn noise_nodes_become_flagged_singletons() {
        let p = Partition::from_clusters(Side::Query, 4, &[vec![0, 2]], &[1, 3]).unwrap();
        assert_eq!(p.num_clusters(), 3);
        assert!(p.is_noise(1));
        assert!(p.is_noise(3));
        assert!(!p.is_noise(0));
        assert_eq!(p.noise_nodes(), vec![1, 3]);
        assert_eq!(p.non_noise_clusters(), vec![(0, vec![0, 2])]);
    }

    #[test]
    fn coarsen_composes() {
        let p = Partition::from_clusters(
            Side::Query,
            5,
            &[vec![0], vec![1, 2], vec![3], vec![4]],
            &[],
        )
        .unwrap();
        // Merge cluster 0 with cluster 1, and 2 with 3.
        let c = p.coarsen(&[vec![0, 1], vec![2, 3]]);
        assert_eq!(c.assignment(), &[0, 0, 0, 1, 1]);
        assert_eq!(c.num_clusters(), 2);
    }

    #[test]
    fn file_roundtrip() {
        let p = Partition::from_clusters(Side::ProductType, 4, &[vec![0, 3]], &[1, 2]).unwrap();
        let labels: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let file = p.to_file(Some(&labels));
        let json = serde_json::to_string(&file).unwrap();
        let parsed: PartitionFile = serde_json::from_str(&json).unwrap();
        let (p2, labels2) = Partition::from_file(&parsed).unwrap();
        assert_eq!(p, p2);
        assert_eq!(labels2.unwrap(), labels);
    }
}
