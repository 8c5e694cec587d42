//! Partition: the divide-and-conquer streaming baseline.
//!
//! The (optionally shuffled) input is cut into `m` contiguous groups. Each
//! group runs `k` iterations of batched D² sampling, drawing
//! `max(1, ⌈3 ln k⌉)` points per iteration. The union of all picks is
//! weighted against the full dataset and reduced to k centers with weighted
//! k-means++.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{sq_dist_unchecked, CenterSet, Dataset};
use crate::parexec::{Purpose, RngKey, ShardPlan};

use super::{check_k, compute_weights_with, init_kmeanspp, lift_provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionConfig {
    /// Number of groups `m`; defaults to `⌈√(n/k)⌉`.
    pub groups: Option<usize>,
    /// Shuffle indices before grouping.
    pub shuffle: bool,
    pub seed: u64,
    /// Shards used for the weight-counting pass.
    pub shards: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            groups: None,
            shuffle: true,
            seed: 0,
            shards: 1,
        }
    }
}

impl PartitionConfig {
    pub fn default_groups(n: usize, k: usize) -> usize {
        ((n as f64 / k as f64).sqrt().ceil() as usize).clamp(1, n)
    }

    /// Points drawn per D² iteration inside a group.
    pub fn batch_size(k: usize) -> usize {
        ((3.0 * (k as f64).ln()).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct PartitionOutcome {
    pub centers: CenterSet,
    /// Number of distinct points picked across all groups.
    pub intermediate_size: usize,
    pub groups: usize,
}

pub fn init_partition(data: &Dataset, k: usize, cfg: &PartitionConfig) -> Result<PartitionOutcome> {
    let n = data.len();
    check_k(k, n)?;
    let m = cfg.groups.unwrap_or_else(|| PartitionConfig::default_groups(n, k));
    if m == 0 || m > n {
        return Err(Error::invalid(format!("group count m = {m} must lie in [1, {n}]")));
    }
    let batch = PartitionConfig::batch_size(k);

    let mut order: Vec<usize> = (0..n).collect();
    if cfg.shuffle {
        order.shuffle(&mut RngKey::new(cfg.seed, Purpose::PartitionShuffle, 0).rng());
    }
    let groups = ShardPlan::new(n, m)?;
    let picks: Vec<Vec<usize>> = groups
        .ranges()
        .par_iter()
        .enumerate()
        .map(|(g, r)| {
            let members = &order[r.clone()];
            let key = RngKey::new(cfg.seed, Purpose::Partition, g as u32);
            seed_group(data, members, k, batch, key)
        })
        .collect();

    let mut intermediate = CenterSet::new(data.dim());
    let mut chosen = vec![false; n];
    for (g, group) in picks.iter().enumerate() {
        for &i in group {
            chosen[i] = true;
            intermediate.push_index(data, i, g as u32);
        }
    }
    let intermediate_size = intermediate.len();
    if intermediate.len() < k {
        let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
        let mut rng = RngKey::new(cfg.seed, Purpose::Padding, 0).rng();
        for &i in free.choose_multiple(&mut rng, k - intermediate.len()) {
            intermediate.push_index(data, i, m as u32);
        }
    }

    let plan = ShardPlan::new(n, cfg.shards)?;
    let weighted = compute_weights_with(data, &intermediate, &plan)?;
    let seed = RngKey::new(cfg.seed, Purpose::Recluster, 0).derive_seed();
    let mut centers = init_kmeanspp(&weighted.to_dataset()?, k, seed)?;
    lift_provenance(&mut centers, &intermediate);
    Ok(PartitionOutcome {
        centers,
        intermediate_size,
        groups: m,
    })
}

/// Batched D² seeding inside one group; returns dataset indices in pick order.
fn seed_group(data: &Dataset, members: &[usize], iterations: usize, batch: usize, key: RngKey) -> Vec<usize> {
    let len = members.len();
    let mut rng = key.rng();
    let mut d2 = vec![f64::INFINITY; len];
    let mut picked_local = vec![false; len];
    let mut picks = Vec::new();
    let mut cumulative = vec![0.0; len];

    for it in 0..iterations {
        let mut acc = 0.0;
        for (j, &i) in members.iter().enumerate() {
            let mass = if it == 0 {
                data.weight(i)
            } else {
                data.weight(i) * d2[j]
            };
            acc += mass;
            cumulative[j] = acc;
        }
        if !(acc > 0.0) {
            break;
        }
        let start = picks.len();
        for _ in 0..batch {
            let target = rng.random::<f64>() * acc;
            let mut j = cumulative.partition_point(|&c| c <= target);
            if j >= len {
                j = cumulative.partition_point(|&c| c < acc);
            }
            if !picked_local[j] {
                picked_local[j] = true;
                picks.push(members[j]);
            }
        }
        for &c in &picks[start..] {
            let cp = data.point(c);
            for (j, &i) in members.iter().enumerate() {
                let d = sq_dist_unchecked(data.point(i), cp);
                if d < d2[j] {
                    d2[j] = d;
                }
            }
        }
    }
    picks
}
