//! Lloyd's iteration for weighted and unweighted data.
//!
//! Each step assigns points to their nearest center (lowest index on ties),
//! moves every nonempty cluster's center to its weighted centroid, and
//! reseeds empty clusters at the points that are currently worst served.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CenterSet, Dataset, Provenance};
use crate::parexec::{accumulate, par_cost, Accumulation, ShardPlan};

/// Floor for the relative-improvement denominator.
const COST_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LloydConfig {
    /// Stop once `(prev - new) / max(prev, ε)` drops below this.
    pub tol: f64,
    /// Step cap; `None` runs until convergence.
    pub max_iters: Option<usize>,
}

impl Default for LloydConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: None,
        }
    }
}

impl LloydConfig {
    /// The bounded variant used for parallel runs (20 steps).
    pub fn bounded() -> Self {
        Self {
            max_iters: Some(20),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0) {
            return Err(Error::invalid("tol must be >= 0"));
        }
        if self.max_iters == Some(0) {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydResult {
    pub centers: CenterSet,
    pub final_cost: f64,
    /// Number of executed steps.
    pub iterations: usize,
    /// Cost of the starting centers followed by the cost after each accepted step.
    pub cost_trace: Vec<f64>,
    pub converged: bool,
}

/// One Lloyd step; returns the new centers and the cost under them.
pub fn lloyd_step(data: &Dataset, centers: &CenterSet) -> Result<(CenterSet, f64)> {
    lloyd_step_with(data, centers, &ShardPlan::serial(data.len()))
}

pub fn lloyd_step_with(
    data: &Dataset,
    centers: &CenterSet,
    plan: &ShardPlan,
) -> Result<(CenterSet, f64)> {
    centers.check_against(data)?;
    let acc = accumulate(data, centers, plan);
    let next = recenter(data, centers, &acc);
    let cost = par_cost(data, &next, plan)?;
    Ok((next, cost))
}

pub fn lloyd_run(data: &Dataset, initial: &CenterSet, cfg: &LloydConfig) -> Result<LloydResult> {
    lloyd_run_with(data, initial, cfg, &ShardPlan::serial(data.len()))
}

pub fn lloyd_run_with(
    data: &Dataset,
    initial: &CenterSet,
    cfg: &LloydConfig,
    plan: &ShardPlan,
) -> Result<LloydResult> {
    cfg.validate()?;
    initial.check_against(data)?;
    if plan.len() != data.len() {
        return Err(Error::invalid("shard plan does not cover the dataset"));
    }

    let mut centers = initial.clone();
    let mut acc = accumulate(data, &centers, plan);
    let mut trace = vec![acc.cost];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        if cfg.max_iters.is_some_and(|m| iterations >= m) {
            break;
        }
        let next = recenter(data, &centers, &acc);
        let next_acc = accumulate(data, &next, plan);
        iterations += 1;

        let prev = acc.cost;
        let new = next_acc.cost;
        if new > prev {
            // Rounding in the centroid update can nudge a converged solution
            // upward; keep the previous centers.
            converged = true;
            break;
        }
        let stable = next_acc.owner == acc.owner;
        centers = next;
        acc = next_acc;
        trace.push(new);
        if new == prev || stable || (prev - new) / prev.max(COST_FLOOR) < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(LloydResult {
        final_cost: acc.cost,
        centers,
        iterations,
        cost_trace: trace,
        converged,
    })
}

/// Centroid update with empty-cluster repair.
///
/// A cluster is empty when it owns no point of positive weight. Empty clusters
/// are processed in index order; each takes the not-yet-taken point with the
/// largest `w·d²` to its current center (lowest index on ties), and that point
/// leaves its donor cluster before the donor's centroid is computed. When no
/// point has positive `w·d²` the empty cluster keeps its center.
fn recenter(data: &Dataset, centers: &CenterSet, acc: &Accumulation) -> CenterSet {
    let k = centers.len();
    let dim = data.dim();
    let n = data.len();

    let mut live = vec![0usize; k];
    for i in 0..n {
        if data.weight(i) > 0.0 {
            live[acc.owner[i]] += 1;
        }
    }

    let mut reseed: Vec<Option<usize>> = vec![None; k];
    let mut taken = vec![false; n];
    let mut donors = vec![false; k];
    while let Some(j) = (0..k).find(|&j| live[j] == 0 && reseed[j].is_none()) {
        let mut best: Option<(usize, f64)> = None;
        for (i, _) in taken.iter().enumerate().filter(|(_, &t)| !t) {
            let v = data.weight(i) * acc.sq_dist[i];
            if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        let Some((i, _)) = best else {
            break;
        };
        taken[i] = true;
        reseed[j] = Some(i);
        live[j] = usize::MAX;
        let donor = acc.owner[i];
        donors[donor] = true;
        if live[donor] != usize::MAX {
            live[donor] -= 1;
        }
    }

    // Donor clusters lost members; rebuild their sums without the taken points.
    let mut sums = acc.sums.clone();
    let mut mass = acc.mass.clone();
    if donors.iter().any(|&d| d) {
        for j in (0..k).filter(|&j| donors[j]) {
            sums[j * dim..(j + 1) * dim].iter_mut().for_each(|s| *s = 0.0);
            mass[j] = 0.0;
        }
        for (i, &j) in acc.owner.iter().enumerate() {
            if donors[j] && !taken[i] {
                let w = data.weight(i);
                for (s, v) in sums[j * dim..(j + 1) * dim].iter_mut().zip(data.point(i)) {
                    *s += w * v;
                }
                mass[j] += w;
            }
        }
    }

    let mut next = centers.clone();
    for j in 0..k {
        if let Some(i) = reseed[j] {
            next.get_mut(j).copy_from_slice(data.point(i));
            next.set_provenance(j, Provenance::point(i, centers.provenance()[j].round));
        } else if mass[j] > 0.0 {
            let m = mass[j];
            for (c, s) in next.get_mut(j).iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                *c = s / m;
            }
            next.set_provenance(j, Provenance::synthetic(centers.provenance()[j].round));
        }
    }
    next
}
