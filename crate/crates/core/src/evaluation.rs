//! Scoring carousel sets: precision, heterogeneity, cohesion, and synthetic
//! recovery (Adjusted Rand Index).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::carousel::Carousel;
use crate::clustering::{Partition, Side};
use crate::error::{MineError, Result};

/// Expert or planted labels used by the metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Product-types that pertain to the event.
    pub event_product_types: BTreeSet<String>,
    /// Product-type id -> department id (total over evaluated carousels).
    pub department_map: BTreeMap<String, String>,
    /// Planted query partition, clusters of query strings (synthetic runs).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub true_partition: Option<Vec<Vec<String>>>,
    /// A merge threshold certified by the generator to recover
    /// `true_partition` exactly.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certified_tau: Option<f64>,
}

impl GroundTruth {
    /// Maps `true_partition` onto graph node indices given the node labels.
    ///
    /// Every label must appear in exactly one truth cluster and vice versa.
    pub fn partition_for(&self, labels: &[String]) -> Result<Partition> {
        let clusters = self
            .true_partition
            .as_ref()
            .ok_or_else(|| MineError::Data("ground truth has no true_partition".into()))?;
        let index_of: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut mapped: Vec<Vec<usize>> = Vec::with_capacity(clusters.len());
        for cluster in clusters {
            let mut ids = Vec::with_capacity(cluster.len());
            for name in cluster {
                let Some(&idx) = index_of.get(name.as_str()) else {
                    return Err(MineError::Data(format!(
                        "true_partition query {name:?} is not a graph node"
                    )));
                };
                ids.push(idx);
            }
            mapped.push(ids);
        }
        Partition::from_clusters(Side::Query, labels.len(), &mapped, &[])
    }
}

fn item_set(carousel: &Carousel) -> HashSet<&str> {
    carousel
        .items
        .iter()
        .map(|i| i.product_type.as_str())
        .collect()
}

/// Percentage of ground-truth product-types covered by the union of all
/// carousel items.
pub fn precision(carousels: &[Carousel], truth: &GroundTruth) -> Result<f64> {
    if truth.event_product_types.is_empty() {
        return Err(MineError::Data(
            "precision needs a nonempty ground-truth product-type set".into(),
        ));
    }
    let mut union: HashSet<&str> = HashSet::new();
    for c in carousels {
        union.extend(item_set(c));
    }
    let covered = truth
        .event_product_types
        .iter()
        .filter(|pt| union.contains(pt.as_str()))
        .count();
    Ok(100.0 * covered as f64 / truth.event_product_types.len() as f64)
}

/// Jaccard similarity |X∩Y| / |X∪Y|; two empty sets count as identical.
pub fn jaccard<T: Eq + std::hash::Hash>(x: &HashSet<T>, y: &HashSet<T>) -> f64 {
    if x.is_empty() && y.is_empty() {
        log::debug!("jaccard of two empty sets, defined as 1.0");
        return 1.0;
    }
    let inter = x.intersection(y).count();
    let union = x.len() + y.len() - inter;
    inter as f64 / union as f64
}

/// One minus the mean pairwise Jaccard similarity of the carousels' item
/// sets. Higher is more diverse. Needs at least two carousels.
pub fn heterogeneity(carousels: &[Carousel]) -> Result<f64> {
    if carousels.len() < 2 {
        return Err(MineError::UndefinedMetric(format!(
            "heterogeneity needs >= 2 carousels, got {}",
            carousels.len()
        )));
    }
    let sets: Vec<HashSet<&str>> = carousels.iter().map(item_set).collect();
    let mut sum = 0.0;
    let mut pairs = 0u64;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            sum += jaccard(&sets[i], &sets[j]);
            pairs += 1;
        }
    }
    Ok(1.0 - sum / pairs as f64)
}

/// Reciprocal of the mean number of distinct departments per carousel.
pub fn cohesion(carousels: &[Carousel], truth: &GroundTruth) -> Result<f64> {
    if carousels.is_empty() {
        return Err(MineError::UndefinedMetric(
            "cohesion needs >= 1 carousel".into(),
        ));
    }
    let mut dept_sum = 0usize;
    for carousel in carousels {
        if carousel.items.is_empty() {
            return Err(MineError::Data(format!(
                "carousel at rank {} has no items; cohesion is undefined",
                carousel.size_rank
            )));
        }
        let mut departments: HashSet<&str> = HashSet::new();
        for item in &carousel.items {
            let Some(dept) = truth.department_map.get(&item.product_type) else {
                return Err(MineError::Data(format!(
                    "product-type {:?} missing from department map",
                    item.product_type
                )));
            };
            departments.insert(dept.as_str());
        }
        dept_sum += departments.len();
    }
    let s = dept_sum as f64 / carousels.len() as f64;
    Ok(1.0 / s)
}

/// Adjusted Rand Index between two partitions of the same node set.
///
/// Panics when sides or node counts differ (caller contract).
pub fn adjusted_rand(pred: &Partition, truth: &Partition) -> f64 {
    assert_eq!(pred.side(), truth.side(), "partition sides differ");
    assert_eq!(
        pred.num_nodes(),
        truth.num_nodes(),
        "partitions cover different node sets"
    );
    let n = pred.num_nodes();
    if n == 0 {
        return 1.0;
    }
    let mut contingency: HashMap<(usize, usize), u64> = HashMap::new();
    for node in 0..n {
        *contingency
            .entry((pred.cluster_of(node), truth.cluster_of(node)))
            .or_insert(0) += 1;
    }
    let comb2 = |x: u64| -> u64 { x * (x.saturating_sub(1)) / 2 };
    let mut pred_sizes = vec![0u64; pred.num_clusters()];
    let mut truth_sizes = vec![0u64; truth.num_clusters()];
    for (&(a, b), &count) in &contingency {
        pred_sizes[a] += count;
        truth_sizes[b] += count;
    }
    let sum_cells: u64 = contingency.values().map(|&c| comb2(c)).sum();
    let sum_pred: u64 = pred_sizes.iter().map(|&c| comb2(c)).sum();
    let sum_truth: u64 = truth_sizes.iter().map(|&c| comb2(c)).sum();
    let total = comb2(n as u64) as f64;

    let expected = sum_pred as f64 * sum_truth as f64 / total;
    let max_index = (sum_pred as f64 + sum_truth as f64) / 2.0;
    if max_index == expected {
        // Both all-singletons or both one cluster: perfect agreement.
        return 1.0;
    }
    (sum_cells as f64 - expected) / (max_index - expected)
}

/// Metrics of one mining run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub event: String,
    pub mode: Option<String>,
    pub tau: Option<f64>,
    pub num_carousels: usize,
    pub precision_pct: Option<f64>,
    pub heterogeneity: Option<f64>,
    pub cohesion: Option<f64>,
    pub ari: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl EvalReport {
    /// Plain-text rendering, one metric per line.
    pub fn to_text(&self) -> String {
        fn fmt(v: Option<f64>) -> String {
            v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
        }
        let mut out = String::new();
        out.push_str(&format!("event:         {}\n", self.event));
        if let Some(mode) = &self.mode {
            out.push_str(&format!("mode:          {mode}\n"));
        }
        if let Some(tau) = self.tau {
            out.push_str(&format!("tau:           {tau}\n"));
        }
        out.push_str(&format!("carousels:     {}\n", self.num_carousels));
        out.push_str(&format!(
            "precision:     {}\n",
            self.precision_pct
                .map_or_else(|| "-".to_string(), |p| format!("{p:.2}%"))
        ));
        out.push_str(&format!("heterogeneity: {}\n", fmt(self.heterogeneity)));
        out.push_str(&format!("cohesion:      {}\n", fmt(self.cohesion)));
        out.push_str(&format!("ari:           {}\n", fmt(self.ari)));
        for note in &self.notes {
            out.push_str(&format!("note: {note}\n"));
        }
        out
    }
}
