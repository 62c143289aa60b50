//! Independent oracles for tests and the acceptance suite.
//!
//! Everything here is deliberately naive and shares no code with the
//! implementation paths it checks: dense vectors, fresh summation each step,
//! quadratic or cubic loops.

/// Straight transcription of the Bayesian point-estimate edge weight, with a
/// different evaluation order than the implementation.
pub fn eq1_weight_oracle(clicks: u64, impressions: u64, alpha: f64, beta: f64) -> f64 {
    let clk = clicks as f64;
    let imp = impressions as f64;
    (((alpha + clk) * (alpha + beta + imp + 1.0)) / (beta + (imp - clk))).sqrt()
}

/// Brute-force threshold-stopped average-linkage clustering over dense
/// vectors: O(n^3)-ish, recomputing every cluster-pair average from the base
/// distance matrix at every step.
///
/// Tie-break: among pairs within 1e-12 of the minimum, the pair whose
/// (smaller member index, larger member index) is lexicographically least
/// merges first. Output clusters are sorted by smallest member.
#[allow(clippy::needless_range_loop)] // deliberately naive index loops
pub fn naive_average_linkage(vectors: &[Vec<f64>], tau: f64) -> Vec<Vec<usize>> {
    const TOL: f64 = 1e-12;
    let n = vectors.len();
    assert!(n >= 1);
    let dist = |a: usize, b: usize| -> f64 {
        vectors[a]
            .iter()
            .zip(&vectors[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut base = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(i, j);
            base[i][j] = d;
            base[j][i] = d;
        }
    }

    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while clusters.len() >= 2 {
        let avg = |a: &[usize], b: &[usize]| -> f64 {
            let mut sum = 0.0;
            for &x in a {
                for &y in b {
                    sum += base[x][y];
                }
            }
            sum / (a.len() as f64 * b.len() as f64)
        };
        let mut dmin = f64::INFINITY;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = avg(&clusters[i], &clusters[j]);
                if d < dmin {
                    dmin = d;
                }
            }
        }
        if dmin >= tau {
            break;
        }
        let mut best: Option<((usize, usize), (usize, usize))> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                if avg(&clusters[i], &clusters[j]) <= dmin + TOL {
                    // Members are kept sorted, so [0] is the minimum.
                    let (ri, rj) = (clusters[i][0], clusters[j][0]);
                    let key = if ri < rj { (ri, rj) } else { (rj, ri) };
                    match best {
                        Some((bk, _)) if bk <= key => {}
                        _ => best = Some((key, (i, j))),
                    }
                }
            }
        }
        let (_, (i, j)) = best.expect("dmin < tau implies an eligible pair");
        let merged = clusters.remove(j);
        clusters[i].extend(merged);
        clusters[i].sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    clusters
}

/// Adjusted Rand Index by direct pair counting over all node pairs.
pub fn ari_pair_counting_oracle(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    // same-same, same-diff, diff-same, diff-diff pair counts
    let (mut n11, mut n10, mut n01, mut n00) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1,
                (true, false) => n10 += 1,
                (false, true) => n01 += 1,
                (false, false) => n00 += 1,
            }
        }
    }
    let (n11, n10, n01, n00) = (n11 as f64, n10 as f64, n01 as f64, n00 as f64);
    let denom = (n11 + n10) * (n10 + n00) + (n11 + n01) * (n01 + n00);
    if denom == 0.0 {
        return 1.0;
    }
    2.0 * (n11 * n00 - n10 * n01) / denom
}
