//! Exact optimum for tiny instances by exhaustive set-partition enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Dataset;

/// Largest number of partitions the oracle agrees to enumerate.
pub const PARTITION_GUARD: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Optimal k-means cost `φ*`.
    pub phi_star: f64,
    /// Cluster label of each point in an optimal clustering.
    pub optimal_partition: Vec<usize>,
}

/// `Σ_{j=1..k} S(n, j)`: the number of partitions of `n` items into at most
/// `k` nonempty blocks, as a float (saturates to infinity).
pub fn partition_count(n: usize, k: usize) -> f64 {
    let k = k.min(n);
    // Row of Stirling numbers of the second kind, S(i, 0..=k).
    let mut row = vec![0.0f64; k + 1];
    row[0] = 1.0;
    for _ in 0..n {
        for j in (1..=k).rev() {
            row[j] = j as f64 * row[j] + row[j - 1];
        }
        row[0] = 0.0;
    }
    row[1..].iter().sum()
}

/// Weighted SSE of the blocks described by `labels`.
fn partition_cost(data: &Dataset, labels: &[usize], blocks: usize, sums: &mut [f64], mass: &mut [f64]) -> f64 {
    let dim = data.dim();
    sums.iter_mut().for_each(|v| *v = 0.0);
    mass.iter_mut().for_each(|v| *v = 0.0);
    for (i, &b) in labels.iter().enumerate() {
        let w = data.weight(i);
        mass[b] += w;
        for (s, &x) in sums[b * dim..(b + 1) * dim].iter_mut().zip(data.point(i)) {
            *s += w * x;
        }
    }
    for b in 0..blocks {
        if mass[b] > 0.0 {
            for s in &mut sums[b * dim..(b + 1) * dim] {
                *s /= mass[b];
            }
        }
    }
    let mut total = 0.0;
    for (i, &b) in labels.iter().enumerate() {
        let c = &sums[b * dim..(b + 1) * dim];
        let d2: f64 = data.point(i).iter().zip(c).map(|(x, m)| (x - m) * (x - m)).sum();
        total += data.weight(i) * d2;
    }
    total
}

/// Enumerates every partition of the points into at most `k` nonempty
/// clusters and returns the cheapest.
pub fn brute_force_optimum(data: &Dataset, k: usize) -> Result<OracleResult> {
    let n = data.len();
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let count = partition_count(n, k);
    if count > PARTITION_GUARD {
        return Err(Error::invalid(format!(
            "oracle guard: {count:.3e} partitions of n = {n} into at most k = {k} blocks exceeds {PARTITION_GUARD:e}"
        )));
    }
    let k = k.min(n);
    let dim = data.dim();
    let mut sums = vec![0.0; k * dim];
    let mut mass = vec![0.0; k];
    let mut best = OracleResult {
        phi_star: f64::INFINITY,
        optimal_partition: vec![0; n],
    };
    for_each_partition(n, k, |labels, blocks| {
        let c = partition_cost(data, labels, blocks, &mut sums, &mut mass);
        if c < best.phi_star {
            best.phi_star = c;
            best.optimal_partition.copy_from_slice(labels);
        }
    });
    Ok(best)
}

/// Calls `visit(labels, blocks)` once per partition of `0..n` into at most
/// `k` nonempty blocks, encoded as restricted growth strings.
fn for_each_partition(n: usize, k: usize, mut visit: impl FnMut(&[usize], usize)) {
    if n == 0 || k == 0 {
        return;
    }
    // labels[0] = 0 and labels[i] ≤ 1 + max(labels[..i]); prefix_max[i] = max(labels[..=i]).
    let mut labels = vec![0usize; n];
    let mut prefix_max = vec![0usize; n];
    loop {
        visit(&labels, prefix_max[n - 1] + 1);
        let mut i = n - 1;
        loop {
            if i == 0 {
                return;
            }
            let limit = (prefix_max[i - 1] + 1).min(k - 1);
            if labels[i] < limit {
                labels[i] += 1;
                prefix_max[i] = prefix_max[i - 1].max(labels[i]);
                for j in i + 1..n {
                    labels[j] = 0;
                    prefix_max[j] = prefix_max[i];
                }
                break;
            }
            i -= 1;
        }
    }
}
