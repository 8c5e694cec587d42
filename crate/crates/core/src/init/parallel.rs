//! k-means|| seeding.
//!
//! One center is picked uniformly, then each round adds an independent
//! D²-weighted sample of expected size ℓ. The union is weighted by the number
//! of points each member owns and reclustered down to k centers with weighted
//! k-means++ followed by weighted Lloyd.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::Result;
use crate::geometry::{CenterSet, Dataset};
use crate::lloyd::{lloyd_run, LloydConfig};
use crate::parexec::{
    par_cost, par_sq_dists, refine_sq_dists, sample_exact_from_sq_dists, sample_from_sq_dists,
    weighted_total, Purpose, RngKey, ShardPlan,
};

use super::{
    compute_weights_with, draw_proportional, init_kmeanspp, lift_provenance, InitConfig,
    InitRunLog, SamplingRound, WeightedCenters, MAX_ROUNDS,
};

/// Lloyd settings for refining the reclustered intermediate set.
const RECLUSTER_LLOYD: LloydConfig = LloydConfig {
    tol: 1e-9,
    max_iters: Some(1000),
};

pub fn init_kmeans_par(data: &Dataset, cfg: &InitConfig) -> Result<(CenterSet, InitRunLog)> {
    let mut warnings = cfg.validate(data.len())?;
    let n = data.len();
    let plan = ShardPlan::new(n, cfg.shards)?;

    let mut first_rng = RngKey::new(cfg.seed, Purpose::FirstCenter, 0).rng();
    let first = match data.weights() {
        None => first_rng.random_range(0..n),
        Some(w) => draw_proportional(w, data.total_weight(), first_rng.random()),
    };
    let mut centers = CenterSet::from_indices(data, &[first], 0);
    let mut d2 = par_sq_dists(data, &centers, &plan)?;
    let psi = weighted_total(data, &d2, &plan);
    let mut phi = psi;

    let requested = cfg.rounds.resolve(psi);
    let mut rounds = Vec::new();
    let mut next_round = 0u32;

    let mut run_round = |centers: &mut CenterSet, d2: &mut Vec<f64>, phi: &mut f64, t: u32| {
        let sample = sample_from_sq_dists(
            data,
            d2,
            *phi,
            cfg.oversampling,
            RngKey::new(cfg.seed, Purpose::Sample, t),
            &plan,
        );
        let picked = if cfg.exact_l {
            let count = cfg.oversampling.round().max(1.0) as usize;
            sample_exact_from_sq_dists(
                data,
                d2,
                count,
                RngKey::new(cfg.seed, Purpose::ExactSample, t),
                &plan,
            )
        } else {
            sample.indices
        };
        rounds.push(SamplingRound {
            round_index: t,
            phi_before: *phi,
            sum_p: sample.sum_p,
            max_p: sample.max_p,
            clamped: sample.clamped,
            sampled: picked.clone(),
        });
        let start = centers.len();
        for &i in &picked {
            centers.push_index(data, i, t + 1);
        }
        *phi = refine_sq_dists(data, centers.tail(start), d2, &plan);
    };

    while next_round < requested && phi > 0.0 {
        run_round(&mut centers, &mut d2, &mut phi, next_round);
        next_round += 1;
    }

    let mut extra_rounds = 0;
    while centers.len() < cfg.k && extra_rounds < MAX_ROUNDS && phi > 0.0 {
        run_round(&mut centers, &mut d2, &mut phi, next_round);
        next_round += 1;
        extra_rounds += 1;
    }
    if extra_rounds > 0 {
        warnings.push(format!(
            "only {} centers after {requested} rounds; ran {extra_rounds} extra rounds",
            centers.len()
        ));
    }

    let mut padded = 0;
    if centers.len() < cfg.k {
        let mut chosen = vec![false; n];
        for p in centers.provenance() {
            if let Some(i) = p.source_index {
                chosen[i] = true;
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
        let need = cfg.k - centers.len();
        let mut rng = RngKey::new(cfg.seed, Purpose::Padding, 0).rng();
        let mut pad: Vec<usize> = free.choose_multiple(&mut rng, need).copied().collect();
        pad.sort_unstable();
        for i in pad {
            centers.push_index(data, i, next_round);
        }
        padded = need;
        warnings.push(format!("padded {need} uniformly chosen centers to reach k = {}", cfg.k));
    }
    for w in &warnings {
        log::warn!("k-means||: {w}");
    }

    let intermediate_size = centers.len();
    let weighted = compute_weights_with(data, &centers, &plan)?;
    let recluster_seed = RngKey::new(cfg.seed, Purpose::Recluster, 0).derive_seed();
    let final_centers = recluster(&weighted, cfg.k, recluster_seed)?;
    let final_seed_cost = par_cost(data, &final_centers, &plan)?;

    Ok((
        final_centers,
        InitRunLog {
            psi,
            rounds,
            extra_rounds,
            padded,
            intermediate_size,
            intermediate_weights: weighted.weights,
            final_seed_cost,
            warnings,
        },
    ))
}

/// Reduces a weighted intermediate set to `k` centers: weighted k-means++
/// seeding, then weighted Lloyd on the intermediate points.
pub fn recluster(weighted: &WeightedCenters, k: usize, seed: u64) -> Result<CenterSet> {
    let points = weighted.to_dataset()?;
    let seeds = init_kmeanspp(&points, k, seed)?;
    let mut centers = lloyd_run(&points, &seeds, &RECLUSTER_LLOYD)?.centers;
    lift_provenance(&mut centers, &weighted.centers);
    Ok(centers)
}
