//! Deterministic sharded data-parallel execution.
//!
//! The index space `[0, n)` is cut into `P` contiguous shards. Kernels see an
//! immutable shard of the dataset plus a read-only copy of the centers and
//! return owned partial results. Partials are merged in shard order through a
//! fixed pairwise tree, so floating sums are reproducible for a given `P`;
//! integer merges and all sampling decisions are identical for every `P`.

mod keyed;

use std::ops::Range;

use rayon::prelude::*;

pub use keyed::{Purpose, RngKey, Uniforms};

use crate::error::{Error, Result};
use crate::geometry::{nearest_in, CenterSet, Dataset};

/// Environment variable that overrides the default shard count.
pub const SHARDS_ENV: &str = "KMPAR_SHARDS";

/// Contiguous, ordered, exhaustive split of `[0, n)` into `P` ranges whose
/// sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardPlan {
    ranges: Vec<Range<usize>>,
}

impl ShardPlan {
    pub fn new(n: usize, shards: usize) -> Result<Self> {
        if shards == 0 {
            return Err(Error::invalid("shard count must be positive"));
        }
        let base = n / shards;
        let extra = n % shards;
        let mut ranges = Vec::with_capacity(shards);
        let mut start = 0;
        for s in 0..shards {
            let len = base + usize::from(s < extra);
            ranges.push(start..start + len);
            start += len;
        }
        Ok(Self { ranges })
    }

    pub fn serial(n: usize) -> Self {
        #[allow(clippy::single_range_in_vec_init)]
        Self { ranges: vec![0..n] }
    }

    /// Shard count from `KMPAR_SHARDS` if set, otherwise the worker count.
    pub fn default_shards() -> usize {
        std::env::var(SHARDS_ENV)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .filter(|&p: &usize| p > 0)
            .unwrap_or_else(rayon::current_num_threads)
    }

    pub fn shards(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn len(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, data: &Dataset) -> Result<()> {
        if self.len() != data.len() {
            return Err(Error::invalid(format!(
                "shard plan covers {} points but dataset has {}",
                self.len(),
                data.len()
            )));
        }
        Ok(())
    }

    /// Runs `kernel` on every shard (possibly concurrently) and returns the
    /// partial results in shard order.
    pub fn map<T, F>(&self, kernel: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Range<usize>) -> T + Sync + Send,
    {
        self.ranges.par_iter().map(|r| kernel(r.clone())).collect()
    }

    /// Like [`ShardPlan::map`], handing each shard its own mutable window of `buf`.
    pub fn map_mut<T, U, F>(&self, buf: &mut [U], kernel: F) -> Vec<T>
    where
        T: Send,
        U: Send,
        F: Fn(Range<usize>, &mut [U]) -> T + Sync + Send,
    {
        assert_eq!(buf.len(), self.len());
        let mut windows = Vec::with_capacity(self.shards());
        let mut rest = buf;
        for r in &self.ranges {
            let (head, tail) = rest.split_at_mut(r.len());
            windows.push((r.clone(), head));
            rest = tail;
        }
        windows
            .into_par_iter()
            .map(|(r, w)| kernel(r, w))
            .collect()
    }
}

/// Fixed-shape pairwise reduction: split in halves, sum each, add.
pub fn tree_sum(parts: &[f64]) -> f64 {
    match parts.len() {
        0 => 0.0,
        1 => parts[0],
        n => {
            let (l, r) = parts.split_at(n / 2);
            tree_sum(l) + tree_sum(r)
        }
    }
}

/// Element-wise [`tree_sum`] over equally sized vectors.
pub fn tree_sum_vecs(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    fn go(parts: &mut [Vec<f64>]) -> Vec<f64> {
        match parts.len() {
            1 => std::mem::take(&mut parts[0]),
            n => {
                let (l, r) = parts.split_at_mut(n / 2);
                let mut a = go(l);
                let b = go(r);
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            }
        }
    }
    if parts.is_empty() {
        return Vec::new();
    }
    go(&mut parts)
}

#[inline]
fn shard_weighted_sum(data: &Dataset, range: Range<usize>, d2: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, d) in range.zip(d2) {
        acc += data.weight(i) * d;
    }
    acc
}

/// `φ_X(C)` as per-shard partial sums merged by the fixed tree.
pub fn par_cost(data: &Dataset, centers: &CenterSet, plan: &ShardPlan) -> Result<f64> {
    centers.check_against(data)?;
    plan.check(data)?;
    let dim = data.dim();
    let parts = plan.map(|range| {
        let mut acc = 0.0;
        for i in range {
            acc += data.weight(i) * nearest_in(data.point(i), centers.coords(), dim).1;
        }
        acc
    });
    Ok(tree_sum(&parts))
}

/// Per-point `d²(x, C)`.
pub fn par_sq_dists(data: &Dataset, centers: &CenterSet, plan: &ShardPlan) -> Result<Vec<f64>> {
    centers.check_against(data)?;
    plan.check(data)?;
    let mut d2 = vec![0.0; data.len()];
    let dim = data.dim();
    plan.map_mut(&mut d2, |range, out| {
        for (i, o) in range.zip(out.iter_mut()) {
            *o = nearest_in(data.point(i), centers.coords(), dim).1;
        }
    });
    Ok(d2)
}

/// Lowers each `d2[i]` to account for `new_centers` (row-major) and returns
/// the updated weighted cost, merged exactly like [`par_cost`].
pub(crate) fn refine_sq_dists(
    data: &Dataset,
    new_centers: &[f64],
    d2: &mut [f64],
    plan: &ShardPlan,
) -> f64 {
    let dim = data.dim();
    let parts = plan.map_mut(d2, |range, out| {
        let mut acc = 0.0;
        for (i, o) in range.zip(out.iter_mut()) {
            if !new_centers.is_empty() && *o > 0.0 {
                let d = nearest_in(data.point(i), new_centers, dim).1;
                if d < *o {
                    *o = d;
                }
            }
            acc += data.weight(i) * *o;
        }
        acc
    });
    tree_sum(&parts)
}

/// Weighted sum of precomputed distances, merged like [`par_cost`].
pub(crate) fn weighted_total(data: &Dataset, d2: &[f64], plan: &ShardPlan) -> f64 {
    let parts = plan.map(|range| {
        let start = range.start;
        let end = range.end;
        shard_weighted_sum(data, range, &d2[start..end])
    });
    tree_sum(&parts)
}

/// Result of one independent-Bernoulli sampling pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    /// Sampled dataset indices, ascending.
    pub indices: Vec<usize>,
    /// `Σ p_x`.
    pub sum_p: f64,
    /// `max p_x`.
    pub max_p: f64,
    /// Number of points whose probability was clamped to 1.
    pub clamped: usize,
}

/// Inclusion probability `min(1, ℓ · w · d² / φ)`.
#[inline]
pub fn inclusion_probability(ell: f64, weight: f64, d2: f64, phi: f64) -> (f64, bool) {
    let p = ell * (weight * d2) / phi;
    if p >= 1.0 {
        (1.0, p > 1.0)
    } else {
        (p, false)
    }
}

/// Samples every point independently from precomputed distances.
pub(crate) fn sample_from_sq_dists(
    data: &Dataset,
    d2: &[f64],
    phi: f64,
    ell: f64,
    key: RngKey,
    plan: &ShardPlan,
) -> SampleOutcome {
    let parts = plan.map(|range| {
        let mut u = key.uniforms_from(range.start);
        let mut picked = Vec::new();
        let (mut sum_p, mut max_p, mut clamped) = (0.0f64, 0.0f64, 0usize);
        for i in range {
            let (p, was_clamped) = inclusion_probability(ell, data.weight(i), d2[i], phi);
            sum_p += p;
            max_p = max_p.max(p);
            clamped += usize::from(was_clamped);
            if u.next_uniform() < p {
                picked.push(i);
            }
        }
        (picked, sum_p, max_p, clamped)
    });
    let sums: Vec<f64> = parts.iter().map(|p| p.1).collect();
    SampleOutcome {
        sum_p: tree_sum(&sums),
        max_p: parts.iter().map(|p| p.2).fold(0.0, f64::max),
        clamped: parts.iter().map(|p| p.3).sum(),
        indices: parts.into_iter().flat_map(|p| p.0).collect(),
    }
}

/// Independent-Bernoulli sample of `X` against `C` with
/// `p_x = min(1, ℓ·w_x·d²(x,C)/φ)`. The draw for point `i` depends only on
/// `(key, i)`, so the result is the same for every shard plan.
pub fn par_sample(
    data: &Dataset,
    centers: &CenterSet,
    phi: f64,
    ell: f64,
    key: RngKey,
    plan: &ShardPlan,
) -> Result<Vec<usize>> {
    if !(phi > 0.0) {
        return Err(Error::invalid("sampling requires a positive cost"));
    }
    let d2 = par_sq_dists(data, centers, plan)?;
    Ok(sample_from_sq_dists(data, &d2, phi, ell, key, plan).indices)
}

/// Exactly `count` distinct points (fewer if fewer have positive mass) drawn
/// without replacement with probability proportional to `w · d²`.
///
/// Uses exponential keys `ln(u) / (w·d²)`: the `count` largest keys form a
/// sample with the same law as `count` successive proportional draws.
pub(crate) fn sample_exact_from_sq_dists(
    data: &Dataset,
    d2: &[f64],
    count: usize,
    key: RngKey,
    plan: &ShardPlan,
) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    let by_key_desc = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    let parts = plan.map(|range| {
        let mut u = key.uniforms_from(range.start);
        let mut keyed = Vec::new();
        for i in range {
            let draw = u.next_uniform();
            let mass = data.weight(i) * d2[i];
            if mass > 0.0 {
                keyed.push(((1.0 - draw).ln() / mass, i));
            }
        }
        keyed.sort_by(by_key_desc);
        keyed.truncate(count);
        keyed
    });
    let mut all: Vec<(f64, usize)> = parts.into_iter().flatten().collect();
    all.sort_by(by_key_desc);
    all.truncate(count);
    let mut out: Vec<usize> = all.into_iter().map(|(_, i)| i).collect();
    out.sort_unstable();
    out
}

/// Per-center point counts and weight mass under the lowest-index tie rule.
pub(crate) fn owner_counts(
    data: &Dataset,
    centers: &CenterSet,
    plan: &ShardPlan,
) -> Result<(Vec<u64>, Vec<f64>)> {
    centers.check_against(data)?;
    plan.check(data)?;
    let k = centers.len();
    let dim = data.dim();
    let parts = plan.map(|range| {
        let mut counts = vec![0u64; k];
        let mut mass = vec![0.0; k];
        for i in range {
            let j = nearest_in(data.point(i), centers.coords(), dim).0;
            counts[j] += 1;
            mass[j] += data.weight(i);
        }
        (counts, mass)
    });
    let mut counts = vec![0u64; k];
    let mut masses = Vec::with_capacity(parts.len());
    for (c, m) in parts {
        counts.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
        masses.push(m);
    }
    Ok((counts, tree_sum_vecs(masses)))
}

/// Number of points owned by each center, computed as per-shard histograms.
pub fn par_weights(data: &Dataset, centers: &CenterSet, plan: &ShardPlan) -> Result<Vec<u64>> {
    Ok(owner_counts(data, centers, plan)?.0)
}

/// Assignment plus per-cluster accumulators for one Lloyd step.
#[derive(Debug, Clone)]
pub(crate) struct Accumulation {
    pub owner: Vec<usize>,
    pub sq_dist: Vec<f64>,
    /// Row-major per-center `Σ w·x`.
    pub sums: Vec<f64>,
    pub mass: Vec<f64>,
    pub cost: f64,
}

pub(crate) fn accumulate(data: &Dataset, centers: &CenterSet, plan: &ShardPlan) -> Accumulation {
    let n = data.len();
    let k = centers.len();
    let dim = data.dim();
    let mut slots = vec![(0usize, 0.0f64); n];
    let parts = plan.map_mut(&mut slots, |range, out| {
        let mut sums = vec![0.0; k * dim];
        let mut mass = vec![0.0; k];
        let mut cost = 0.0;
        for (i, slot) in range.zip(out.iter_mut()) {
            let x = data.point(i);
            let w = data.weight(i);
            let (j, d) = nearest_in(x, centers.coords(), dim);
            *slot = (j, d);
            cost += w * d;
            mass[j] += w;
            for (s, v) in sums[j * dim..(j + 1) * dim].iter_mut().zip(x) {
                *s += w * v;
            }
        }
        (sums, mass, cost)
    });
    let mut sums = Vec::with_capacity(parts.len());
    let mut mass = Vec::with_capacity(parts.len());
    let mut costs = Vec::with_capacity(parts.len());
    for (s, m, cost) in parts {
        sums.push(s);
        mass.push(m);
        costs.push(cost);
    }
    let (owner, sq_dist) = slots.into_iter().unzip();
    Accumulation {
        owner,
        sq_dist,
        sums: tree_sum_vecs(sums),
        mass: tree_sum_vecs(mass),
        cost: tree_sum(&costs),
    }
}
