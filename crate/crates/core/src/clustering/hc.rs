//! Threshold-stopped average-linkage agglomerative clustering.
//!
//! One round starts from singletons and repeatedly merges the pair of
//! clusters with the smallest average pairwise distance, while that distance
//! stays below `tau`. Average linkage is computed over the round's input
//! vectors throughout (classic average linkage, no re-vectorization inside a
//! round).
//!
//! Selection is deterministic: among all pairs within [`TIE_TOLERANCE`] of
//! the minimum, the pair whose (smaller member index, larger member index)
//! is lexicographically least merges first.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::weighting::SparseVector;

/// Absolute tolerance for distance ties during merge selection.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Skip rayon dispatch below this many vectors.
const PARALLEL_CUTOFF: usize = 64;

/// Euclidean distance between sparse vectors; missing entries are zero.
///
/// Panics on dimension mismatch (caller contract).
pub fn euclidean_distance(u: &SparseVector, v: &SparseVector) -> f64 {
    assert_eq!(
        u.dim(),
        v.dim(),
        "dimension mismatch: {} vs {}",
        u.dim(),
        v.dim()
    );
    let ue = u.entries();
    let ve = v.entries();
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0f64;
    while i < ue.len() && j < ve.len() {
        match ue[i].0.cmp(&ve[j].0) {
            Ordering::Less => {
                acc += ue[i].1 * ue[i].1;
                i += 1;
            }
            Ordering::Greater => {
                acc += ve[j].1 * ve[j].1;
                j += 1;
            }
            Ordering::Equal => {
                let d = ue[i].1 - ve[j].1;
                acc += d * d;
                i += 1;
                j += 1;
            }
        }
    }
    for &(_, w) in &ue[i..] {
        acc += w * w;
    }
    for &(_, w) in &ve[j..] {
        acc += w * w;
    }
    acc.sqrt()
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    slot: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.slot.cmp(&other.slot))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Working state for one round.
///
/// `sums` holds, per active cluster pair, the SUM of pairwise base distances
/// between their members (condensed upper triangle indexed by slot). Merging
/// j into i adds row j into row i, so the average-linkage distance is always
/// `sums / (|a| * |b|)`. Since the combined mean lies between the two old
/// means, a slot's published minimum never overtakes the true one, which is
/// what makes the lazy heap below sound.
///
/// Clusters merge into the lower slot, so an active slot's id equals its
/// smallest member index and tie-break keys are plain slot pairs.
struct RoundState {
    n: usize,
    sums: Vec<f64>,
    sizes: Vec<usize>,
    members: Vec<Vec<usize>>,
    active: Vec<bool>,
    n_active: usize,
    heap: BinaryHeap<std::cmp::Reverse<HeapItem>>,
}

impl RoundState {
    fn pair_index(&self, a: usize, b: usize) -> usize {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    fn mean(&self, a: usize, b: usize) -> f64 {
        self.sums[self.pair_index(a, b)] / (self.sizes[a] as f64 * self.sizes[b] as f64)
    }

    fn row_min(&self, slot: usize) -> Option<f64> {
        let mut best: Option<f64> = None;
        for m in 0..self.n {
            if m == slot || !self.active[m] {
                continue;
            }
            let d = self.mean(slot, m);
            best = Some(match best {
                Some(b) if b <= d => b,
                _ => d,
            });
        }
        best
    }

    fn push(&mut self, dist: f64, slot: usize) {
        self.heap.push(std::cmp::Reverse(HeapItem { dist, slot }));
    }

    /// Pops until the top entry reproduces its row's current minimum; that
    /// value is the global minimum pair distance.
    fn global_min(&mut self) -> f64 {
        loop {
            let std::cmp::Reverse(item) = self.heap.pop().expect("active slots keep heap entries");
            if !self.active[item.slot] {
                continue;
            }
            let rm = self
                .row_min(item.slot)
                .expect("global_min requires >= 2 active clusters");
            self.push(rm, item.slot);
            if rm == item.dist {
                return rm;
            }
        }
    }

    /// Least (i, j) key among pairs within tolerance of `dmin`.
    fn select_pair(&mut self, dmin: f64) -> (usize, usize) {
        let threshold = dmin + TIE_TOLERANCE;
        let mut seen = vec![false; self.n];
        let mut best: Option<(usize, usize)> = None;
        let mut repush: Vec<(f64, usize)> = Vec::new();
        while let Some(std::cmp::Reverse(top)) = self.heap.peek() {
            if top.dist > threshold {
                break;
            }
            let std::cmp::Reverse(item) = self.heap.pop().expect("peeked");
            if !self.active[item.slot] || seen[item.slot] {
                continue;
            }
            seen[item.slot] = true;
            let mut rm: Option<f64> = None;
            for m in 0..self.n {
                if m == item.slot || !self.active[m] {
                    continue;
                }
                let d = self.mean(item.slot, m);
                rm = Some(match rm {
                    Some(b) if b <= d => b,
                    _ => d,
                });
                if d <= threshold {
                    let key = if item.slot < m {
                        (item.slot, m)
                    } else {
                        (m, item.slot)
                    };
                    best = Some(match best {
                        Some(k) if k <= key => k,
                        _ => key,
                    });
                }
            }
            repush.push((rm.expect(">= 2 active clusters"), item.slot));
        }
        for (dist, slot) in repush {
            self.push(dist, slot);
        }
        best.expect("the global minimum pair is always eligible")
    }

    fn merge(&mut self, i: usize, j: usize) {
        debug_assert!(i < j && self.active[i] && self.active[j]);
        for m in 0..self.n {
            if !self.active[m] || m == i || m == j {
                continue;
            }
            let add = self.sums[self.pair_index(m, j)];
            let idx = self.pair_index(m, i);
            self.sums[idx] += add;
        }
        self.sizes[i] += self.sizes[j];
        self.active[j] = false;
        self.n_active -= 1;
        let moved = std::mem::take(&mut self.members[j]);
        self.members[i].extend(moved);
        if self.n_active >= 2 {
            let rm = self.row_min(i).expect("other active clusters exist");
            self.push(rm, i);
        }
    }
}

/// Condensed upper-triangular matrix of pairwise distances.
fn pairwise_distances(vectors: &[SparseVector]) -> Vec<f64> {
    let n = vectors.len();
    let mut flat = vec![0.0f64; n * (n - 1) / 2];
    let mut rows: Vec<(usize, &mut [f64])> = Vec::with_capacity(n - 1);
    let mut rest = flat.as_mut_slice();
    for i in 0..n - 1 {
        let (row, tail) = rest.split_at_mut(n - 1 - i);
        rows.push((i, row));
        rest = tail;
    }
    let fill = |(i, row): &mut (usize, &mut [f64])| {
        for (off, cell) in row.iter_mut().enumerate() {
            let j = *i + 1 + off;
            *cell = euclidean_distance(&vectors[*i], &vectors[j]);
        }
    };
    if n < PARALLEL_CUTOFF {
        rows.iter_mut().for_each(fill);
    } else {
        rows.par_iter_mut().for_each(fill);
    }
    flat
}

/// One round of threshold-stopped average-linkage clustering.
///
/// Returns the clusters of input indices in canonical order (sorted by
/// smallest member, members ascending). Deterministic for a fixed input,
/// independent of thread count.
pub fn hc_round(vectors: &[SparseVector], tau: f64) -> Vec<Vec<usize>> {
    assert!(!vectors.is_empty(), "hc_round needs at least one vector");
    assert!(tau > 0.0 && tau.is_finite(), "tau must be positive");
    let n = vectors.len();
    if n == 1 {
        return vec![vec![0]];
    }

    let sums = pairwise_distances(vectors);
    let mut state = RoundState {
        n,
        sums,
        sizes: vec![1; n],
        members: (0..n).map(|i| vec![i]).collect(),
        active: vec![true; n],
        n_active: n,
        heap: BinaryHeap::with_capacity(2 * n),
    };
    for slot in 0..n {
        let rm = state.row_min(slot).expect("n >= 2");
        state.push(rm, slot);
    }

    while state.n_active >= 2 {
        let dmin = state.global_min();
        if dmin >= tau {
            break;
        }
        let (i, j) = state.select_pair(dmin);
        state.merge(i, j);
    }

    let mut out = Vec::with_capacity(state.n_active);
    for slot in 0..n {
        if state.active[slot] {
            let mut members = std::mem::take(&mut state.members[slot]);
            members.sort_unstable();
            out.push(members);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::naive_average_linkage;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn sv(dim: usize, entries: &[(usize, f64)]) -> SparseVector {
        SparseVector::new(dim, entries.to_vec())
    }

    #[test]
    fn euclidean_examples() {
        let u = sv(2, &[(0, 3.0)]);
        let v = sv(2, &[(1, 4.0)]);
        assert_eq!(euclidean_distance(&u, &u), 0.0);
        assert_eq!(euclidean_distance(&u, &v), 5.0);
        let w = sv(2, &[(0, 1.0)]);
        let z = SparseVector::empty(2);
        assert_eq!(euclidean_distance(&w, &z), 1.0);
        assert_eq!(euclidean_distance(&u, &v), euclidean_distance(&v, &u));
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn euclidean_dimension_contract() {
        euclidean_distance(&sv(2, &[(0, 1.0)]), &sv(3, &[(0, 1.0)]));
    }

    #[test]
    fn identical_vectors_merge() {
        let v = sv(2, &[(0, 1.0), (1, 2.0)]);
        let out = hc_round(&[v.clone(), v], 0.1);
        assert_eq!(out, vec![vec![0, 1]]);
    }

    #[test]
    fn distant_vectors_stay_singletons() {
        let vs = vec![
            sv(3, &[(0, 10.0)]),
            sv(3, &[(1, 10.0)]),
            sv(3, &[(2, 10.0)]),
        ];
        let out = hc_round(&vs, 1.0);
        assert_eq!(out, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn single_vector() {
        assert_eq!(hc_round(&[sv(1, &[(0, 1.0)])], 0.5), vec![vec![0]]);
    }

    #[test]
    fn tie_break_prefers_lexicographically_least_pair() {
        // Vectors 0, 1, 2 mutually equidistant; (0, 1) must merge first, and
        // with a generous tau everything collapses into one cluster.
        let vs = vec![sv(3, &[(0, 1.0)]), sv(3, &[(1, 1.0)]), sv(3, &[(2, 1.0)])];
        let out = hc_round(&vs, 10.0);
        assert_eq!(out, vec![vec![0, 1, 2]]);
        // Below the singleton distance nothing merges.
        let out = hc_round(&vs, 1.0);
        assert_eq!(out.len(), 3);
    }

    fn random_vectors(seed: u64, n: usize, dim: usize) -> Vec<SparseVector> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut entries: Vec<(usize, f64)> = Vec::new();
                for d in 0..dim {
                    if rng.random_bool(0.6) {
                        entries.push((d, rng.random_range(0.1..5.0)));
                    }
                }
                SparseVector::new(dim, entries)
            })
            .collect()
    }

    #[test]
    fn matches_oracle_on_fixed_cases() {
        for seed in 0..20u64 {
            let vectors = random_vectors(seed, 12, 4);
            let dense: Vec<Vec<f64>> = vectors
                .iter()
                .map(|v| (0..v.dim()).map(|d| v.get(d)).collect())
                .collect();
            for tau in [0.5, 1.5, 3.0, 8.0] {
                let got = hc_round(&vectors, tau);
                let want = naive_average_linkage(&dense, tau);
                assert_eq!(got, want, "seed {seed} tau {tau}");
            }
        }
    }

    #[test]
    fn tau_bounds_behaviour() {
        let vectors = random_vectors(7, 10, 3);
        // Far below any pairwise distance: all singletons.
        let out = hc_round(&vectors, 1e-9);
        assert_eq!(out.len(), vectors.len());
        // Far above any possible merge distance: one cluster.
        let out = hc_round(&vectors, 1e9);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0], (0..vectors.len()).collect::<Vec<_>>());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn agrees_with_naive_oracle(seed in 0u64..10_000, n in 2usize..24, tau_scale in 0.05f64..2.0) {
            let vectors = random_vectors(seed, n, 5);
            let dense: Vec<Vec<f64>> = vectors
                .iter()
                .map(|v| (0..v.dim()).map(|d| v.get(d)).collect())
                .collect();
            // Scale tau to the data so both regimes (merging and not) occur.
            let mut maxd = 0.0f64;
            for i in 0..n {
                for j in i + 1..n {
                    maxd = maxd.max(euclidean_distance(&vectors[i], &vectors[j]));
                }
            }
            let tau = (maxd * tau_scale).max(1e-6);
            let got = hc_round(&vectors, tau);
            let want = naive_average_linkage(&dense, tau);
            prop_assert_eq!(got, want);
        }

        #[test]
        fn deterministic_across_runs(seed in 0u64..500) {
            let vectors = random_vectors(seed, 15, 4);
            let a = hc_round(&vectors, 2.0);
            let b = hc_round(&vectors, 2.0);
            prop_assert_eq!(a, b);
        }
    }
}
