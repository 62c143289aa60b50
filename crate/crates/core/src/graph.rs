//! The query/product-type bipartite graph with impression and click counts.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{MineError, Result};
use crate::ingest::RawLogRow;

/// Aggregated impression/click counts for a node pair or cluster pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClusterStats {
    pub impressions: u64,
    pub clicks: u64,
}

impl ClusterStats {
    pub fn add(&mut self, impressions: u64, clicks: u64) {
        self.impressions += impressions;
        self.clicks += clicks;
    }
}

/// One edge endpoint as seen from the adjacency of the opposite side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Index of the node on the other side.
    pub node: usize,
    pub impressions: u64,
    pub clicks: u64,
}

/// Immutable bipartite graph of queries (side Q) and product-types (side P).
///
/// Node indices are dense, 0-based, and assigned in first-seen row order, so
/// a fixed input stream always produces the same graph. Adjacency is stored
/// for both sides; each list is sorted by the opposite node index.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    queries: Vec<String>,
    product_types: Vec<String>,
    by_query: Vec<Vec<Edge>>,
    by_pt: Vec<Vec<Edge>>,
    num_edges: usize,
}

/// Builds the graph from validated rows.
///
/// Duplicate (query, product-type) rows are summed componentwise.
/// Product-types with zero aggregate impressions are excluded, and queries
/// left without edges after that exclusion are excluded too.
pub fn build_graph(rows: &[RawLogRow]) -> Result<BipartiteGraph> {
    if rows.is_empty() {
        return Err(MineError::EmptyGraph);
    }

    // Temporary ids in first-seen order over the raw stream.
    let mut q_ids: HashMap<&str, usize> = HashMap::new();
    let mut p_ids: HashMap<&str, usize> = HashMap::new();
    let mut q_names: Vec<&str> = Vec::new();
    let mut p_names: Vec<&str> = Vec::new();
    let mut edges: HashMap<(usize, usize), ClusterStats> = HashMap::new();

    for row in rows {
        debug_assert!(row.clicks <= row.impressions, "rows must be pre-validated");
        let q = *q_ids.entry(&row.query).or_insert_with(|| {
            q_names.push(&row.query);
            q_names.len() - 1
        });
        let p = *p_ids.entry(&row.product_type).or_insert_with(|| {
            p_names.push(&row.product_type);
            p_names.len() - 1
        });
        edges
            .entry((q, p))
            .or_default()
            .add(row.impressions, row.clicks);
    }

    // A product-type survives only with at least one impression on record.
    let mut pt_total = vec![0u64; p_names.len()];
    for (&(_, p), stats) in &edges {
        pt_total[p] += stats.impressions;
    }
    let p_keep: Vec<Option<usize>> = {
        let mut next = 0;
        pt_total
            .iter()
            .map(|&total| {
                if total >= 1 {
                    next += 1;
                    Some(next - 1)
                } else {
                    None
                }
            })
            .collect()
    };

    let mut q_has_edge = vec![false; q_names.len()];
    for &(q, p) in edges.keys() {
        if p_keep[p].is_some() {
            q_has_edge[q] = true;
        }
    }
    let q_keep: Vec<Option<usize>> = {
        let mut next = 0;
        q_has_edge
            .iter()
            .map(|&keep| {
                if keep {
                    next += 1;
                    Some(next - 1)
                } else {
                    None
                }
            })
            .collect()
    };

    let queries: Vec<String> = q_names
        .iter()
        .zip(&q_keep)
        .filter(|(_, keep)| keep.is_some())
        .map(|(name, _)| name.to_string())
        .collect();
    let product_types: Vec<String> = p_names
        .iter()
        .zip(&p_keep)
        .filter(|(_, keep)| keep.is_some())
        .map(|(name, _)| name.to_string())
        .collect();
    if queries.is_empty() || product_types.is_empty() {
        return Err(MineError::EmptyGraph);
    }

    let mut by_query: Vec<Vec<Edge>> = vec![Vec::new(); queries.len()];
    let mut by_pt: Vec<Vec<Edge>> = vec![Vec::new(); product_types.len()];
    let mut num_edges = 0;
    for (&(q, p), stats) in &edges {
        let (Some(qi), Some(pi)) = (q_keep[q], p_keep[p]) else {
            continue;
        };
        by_query[qi].push(Edge {
            node: pi,
            impressions: stats.impressions,
            clicks: stats.clicks,
        });
        by_pt[pi].push(Edge {
            node: qi,
            impressions: stats.impressions,
            clicks: stats.clicks,
        });
        num_edges += 1;
    }
    for adj in by_query.iter_mut().chain(by_pt.iter_mut()) {
        adj.sort_by_key(|e| e.node);
    }

    Ok(BipartiteGraph {
        queries,
        product_types,
        by_query,
        by_pt,
        num_edges,
    })
}

impl BipartiteGraph {
    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn num_product_types(&self) -> usize {
        self.product_types.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn queries(&self) -> &[String] {
        &self.queries
    }

    pub fn product_types(&self) -> &[String] {
        &self.product_types
    }

    /// Edges of one query, sorted by product-type index.
    pub fn query_edges(&self, q: usize) -> &[Edge] {
        &self.by_query[q]
    }

    /// Edges of one product-type, sorted by query index.
    pub fn pt_edges(&self, p: usize) -> &[Edge] {
        &self.by_pt[p]
    }

    /// Sums impressions and clicks over all edges between the two clusters.
    ///
    /// Missing edges contribute zero. Panics on empty clusters or
    /// out-of-range indices (caller contract).
    pub fn aggregate_stats(&self, query_cluster: &[usize], pt_cluster: &[usize]) -> ClusterStats {
        assert!(!query_cluster.is_empty(), "empty query cluster");
        assert!(!pt_cluster.is_empty(), "empty product-type cluster");
        for &p in pt_cluster {
            assert!(
                p < self.product_types.len(),
                "product-type index {p} out of range"
            );
        }
        let members: std::collections::HashSet<usize> = pt_cluster.iter().copied().collect();
        let mut stats = ClusterStats::default();
        for &q in query_cluster {
            assert!(q < self.queries.len(), "query index {q} out of range");
            for e in &self.by_query[q] {
                if members.contains(&e.node) {
                    stats.add(e.impressions, e.clicks);
                }
            }
        }
        stats
    }

    /// Content-level canonical form: edges as (query, product-type, imp, clk)
    /// string triples, sorted. Two graphs built from reordered rows compare
    /// equal here even when their indices differ.
    pub fn canonical_edges(&self) -> Vec<(String, String, u64, u64)> {
        let mut out: Vec<(String, String, u64, u64)> = Vec::with_capacity(self.num_edges);
        for (q, adj) in self.by_query.iter().enumerate() {
            for e in adj {
                out.push((
                    self.queries[q].clone(),
                    self.product_types[e.node].clone(),
                    e.impressions,
                    e.clicks,
                ));
            }
        }
        out.sort();
        out
    }

    /// Writes a versioned snapshot; byte-stable for a fixed graph.
    pub fn save_snapshot<W: Write>(&self, writer: W) -> Result<()> {
        let mut edges = Vec::with_capacity(self.num_edges);
        for (q, adj) in self.by_query.iter().enumerate() {
            for e in adj {
                edges.push((q, e.node, e.impressions, e.clicks));
            }
        }
        let snap = GraphSnapshot {
            format_version: SNAPSHOT_VERSION,
            queries: self.queries.clone(),
            product_types: self.product_types.clone(),
            edges,
        };
        serde_json::to_writer(writer, &snap)?;
        Ok(())
    }

    /// Loads and validates a snapshot written by [`Self::save_snapshot`].
    pub fn load_snapshot<R: Read>(reader: R) -> Result<Self> {
        let snap: GraphSnapshot = serde_json::from_reader(reader)?;
        if snap.format_version != SNAPSHOT_VERSION {
            return Err(MineError::Data(format!(
                "unsupported graph snapshot version {} (expected {})",
                snap.format_version, SNAPSHOT_VERSION
            )));
        }
        let nq = snap.queries.len();
        let np = snap.product_types.len();
        if nq == 0 || np == 0 {
            return Err(MineError::EmptyGraph);
        }
        let mut by_query: Vec<Vec<Edge>> = vec![Vec::new(); nq];
        let mut by_pt: Vec<Vec<Edge>> = vec![Vec::new(); np];
        for &(q, p, impressions, clicks) in &snap.edges {
            if q >= nq || p >= np {
                return Err(MineError::Data(format!(
                    "snapshot edge ({q},{p}) out of range"
                )));
            }
            if clicks > impressions {
                return Err(MineError::Data(format!(
                    "snapshot edge ({q},{p}) has clicks {clicks} > impressions {impressions}"
                )));
            }
            by_query[q].push(Edge {
                node: p,
                impressions,
                clicks,
            });
            by_pt[p].push(Edge {
                node: q,
                impressions,
                clicks,
            });
        }
        for adj in by_query.iter_mut().chain(by_pt.iter_mut()) {
            adj.sort_by_key(|e| e.node);
        }
        if by_query.iter().any(Vec::is_empty) {
            return Err(MineError::Data("snapshot has a query without edges".into()));
        }
        if by_pt
            .iter()
            .any(|adj| adj.iter().map(|e| e.impressions).sum::<u64>() == 0)
        {
            return Err(MineError::Data(
                "snapshot has a product-type without impressions".into(),
            ));
        }
        let num_edges = snap.edges.len();
        Ok(BipartiteGraph {
            queries: snap.queries,
            product_types: snap.product_types,
            by_query,
            by_pt,
            num_edges,
        })
    }
}

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GraphSnapshot {
    format_version: u32,
    queries: Vec<String>,
    product_types: Vec<String>,
    edges: Vec<(usize, usize, u64, u64)>,
}
