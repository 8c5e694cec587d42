//! Seeding algorithms: uniform random, k-means++, k-means|| and Partition.
//!
//! Every initializer returns exactly `k` centers of the dataset's dimension.
//! Random and k-means++ return dataset points; k-means|| returns the
//! centroids produced by reclustering its weighted intermediate set.

mod kmeanspp;
mod parallel;
mod partition;
mod random;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use kmeanspp::init_kmeanspp;
pub use parallel::{init_kmeans_par, recluster};
pub use partition::{init_partition, PartitionConfig, PartitionOutcome};
pub use random::init_random;

use crate::error::{Error, Result};
use crate::geometry::{CenterSet, Dataset, Provenance};
use crate::parexec::{
    owner_counts, par_sq_dists, sample_from_sq_dists, RngKey, ShardPlan,
};

/// Hard cap on both the automatic round count and the extra rounds run when
/// too few centers were sampled.
pub const MAX_ROUNDS: u32 = 64;

/// Number of k-means|| sampling rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RoundsRepr", into = "RoundsRepr")]
pub enum Rounds {
    /// `⌈log₂ ψ⌉`, clamped to `[1, 64]`.
    Auto,
    Fixed(u32),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RoundsRepr {
    Count(u32),
    Word(String),
}

impl TryFrom<RoundsRepr> for Rounds {
    type Error = String;

    fn try_from(r: RoundsRepr) -> std::result::Result<Self, String> {
        match r {
            RoundsRepr::Count(n) => Ok(Rounds::Fixed(n)),
            RoundsRepr::Word(s) => s.parse(),
        }
    }
}

impl From<Rounds> for RoundsRepr {
    fn from(r: Rounds) -> Self {
        match r {
            Rounds::Auto => RoundsRepr::Word("auto".into()),
            Rounds::Fixed(n) => RoundsRepr::Count(n),
        }
    }
}

impl FromStr for Rounds {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Rounds::Auto);
        }
        s.parse::<u32>()
            .map(Rounds::Fixed)
            .map_err(|_| format!("rounds must be a positive integer or 'auto', got '{s}'"))
    }
}

impl fmt::Display for Rounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rounds::Auto => f.write_str("auto"),
            Rounds::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl Rounds {
    /// Resolves the round count for an initial cost `psi`.
    pub fn resolve(self, psi: f64) -> u32 {
        match self {
            Rounds::Fixed(r) => r,
            Rounds::Auto => {
                let r = psi.log2().ceil();
                if r.is_nan() || r < 1.0 {
                    1
                } else {
                    (r as u32).min(MAX_ROUNDS)
                }
            }
        }
    }
}

/// Parameters of k-means||.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub k: usize,
    /// Oversampling factor ℓ: expected number of points drawn per round.
    pub oversampling: f64,
    pub rounds: Rounds,
    pub seed: u64,
    pub shards: usize,
    /// Draw exactly `round(ℓ)` points per round without replacement instead
    /// of independent Bernoulli trials.
    #[serde(default)]
    pub exact_l: bool,
}

impl InitConfig {
    pub fn new(k: usize, oversampling: f64, rounds: Rounds, seed: u64) -> Self {
        Self {
            k,
            oversampling,
            rounds,
            seed,
            shards: 1,
            exact_l: false,
        }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards;
        self
    }

    pub fn with_exact_l(mut self, exact_l: bool) -> Self {
        self.exact_l = exact_l;
        self
    }

    /// Checks the configuration against a dataset of `n` points and returns
    /// non-fatal warnings.
    pub fn validate(&self, n: usize) -> Result<Vec<String>> {
        check_k(self.k, n)?;
        if !(self.oversampling > 0.0 && self.oversampling.is_finite()) {
            return Err(Error::invalid("oversampling factor must be positive and finite"));
        }
        if self.shards == 0 {
            return Err(Error::invalid("shard count must be positive"));
        }
        let mut warnings = Vec::new();
        if let Rounds::Fixed(r) = self.rounds {
            if r == 0 {
                return Err(Error::invalid("rounds must be positive"));
            }
            let budget = f64::from(r) * self.oversampling;
            if budget < 1.0 {
                return Err(Error::invalid(format!(
                    "rounds * oversampling = {budget} < 1: no point would be sampled in expectation"
                )));
            }
            if budget < self.k as f64 {
                warnings.push(format!(
                    "rounds * oversampling = {budget} < k = {}; expect extra rounds or padding",
                    self.k
                ));
            }
        }
        Ok(warnings)
    }
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds the number of points n = {n}")));
    }
    Ok(())
}

/// Trace of one k-means|| sampling round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingRound {
    pub round_index: u32,
    /// `φ_X(C)` at the start of the round.
    pub phi_before: f64,
    /// `Σ_x p_x` (in exact-ℓ mode, the Bernoulli probabilities the round
    /// would have used).
    pub sum_p: f64,
    pub max_p: f64,
    /// Points whose probability was clamped to 1.
    pub clamped: usize,
    /// Dataset indices picked this round, ascending.
    pub sampled: Vec<usize>,
}

/// Intermediate centers together with how much of the dataset each one owns.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCenters {
    pub centers: CenterSet,
    /// Number of dataset points whose nearest center is this one.
    pub weights: Vec<u64>,
    /// Total point weight owned (equals `weights` for unweighted data).
    pub mass: Vec<f64>,
}

impl WeightedCenters {
    /// The centers as a weighted dataset, ready for reclustering.
    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::new(self.centers.coords().to_vec(), self.centers.dim())?
            .with_weights(self.mass.clone())
    }
}

/// Per-run record of k-means||.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitRunLog {
    /// Cost after the first center.
    pub psi: f64,
    pub rounds: Vec<SamplingRound>,
    /// Rounds executed beyond the requested count because fewer than k
    /// centers had been sampled.
    pub extra_rounds: u32,
    /// Centers added uniformly at random after the extra rounds ran out.
    pub padded: usize,
    /// `|C|` before reclustering.
    pub intermediate_size: usize,
    /// Points owned by each intermediate center, in intermediate order.
    pub intermediate_weights: Vec<u64>,
    /// Cost of the k returned centers.
    pub final_seed_cost: f64,
    pub warnings: Vec<String>,
}

/// One independent-Bernoulli k-means|| round against `centers`.
///
/// `phi` must equal `φ_X(C) > 0`.
pub fn sample_round(
    data: &Dataset,
    centers: &CenterSet,
    phi: f64,
    oversampling: f64,
    key: RngKey,
) -> Result<(Vec<usize>, SamplingRound)> {
    if !(phi > 0.0) {
        return Err(Error::invalid("sample_round requires a positive cost"));
    }
    let plan = ShardPlan::serial(data.len());
    let d2 = par_sq_dists(data, centers, &plan)?;
    let s = sample_from_sq_dists(data, &d2, phi, oversampling, key, &plan);
    let round = SamplingRound {
        round_index: key.round,
        phi_before: phi,
        sum_p: s.sum_p,
        max_p: s.max_p,
        clamped: s.clamped,
        sampled: s.indices.clone(),
    };
    Ok((s.indices, round))
}

/// Counts, for every center, the dataset points closest to it.
pub fn compute_weights(data: &Dataset, centers: &CenterSet) -> Result<WeightedCenters> {
    compute_weights_with(data, centers, &ShardPlan::serial(data.len()))
}

pub fn compute_weights_with(
    data: &Dataset,
    centers: &CenterSet,
    plan: &ShardPlan,
) -> Result<WeightedCenters> {
    let (weights, mass) = owner_counts(data, centers, plan)?;
    Ok(WeightedCenters {
        centers: centers.clone(),
        weights,
        mass,
    })
}

/// Seeding algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Random,
    Kmpp,
    Kmpar,
    Partition,
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Algorithm::Random),
            "kmpp" | "kmeans++" => Ok(Algorithm::Kmpp),
            "kmpar" | "kmeans||" => Ok(Algorithm::Kmpar),
            "partition" => Ok(Algorithm::Partition),
            _ => Err(format!("unknown initializer '{s}'")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Random => "random",
            Algorithm::Kmpp => "kmpp",
            Algorithm::Kmpar => "kmpar",
            Algorithm::Partition => "partition",
        })
    }
}

/// Everything needed to seed one run with any of the algorithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedingSpec {
    pub algorithm: Algorithm,
    pub k: usize,
    pub oversampling: f64,
    pub rounds: Rounds,
    pub exact_l: bool,
    pub shards: usize,
    pub partition_groups: Option<usize>,
    pub seed: u64,
}

/// Output of [`seed_centers`].
#[derive(Debug, Clone)]
pub struct Seeding {
    pub centers: CenterSet,
    /// Size of the pre-reclustering set (k-means|| and Partition only).
    pub intermediate_size: Option<usize>,
    pub log: Option<InitRunLog>,
}

pub fn seed_centers(data: &Dataset, spec: &SeedingSpec) -> Result<Seeding> {
    match spec.algorithm {
        Algorithm::Random => Ok(Seeding {
            centers: init_random(data, spec.k, spec.seed)?,
            intermediate_size: None,
            log: None,
        }),
        Algorithm::Kmpp => Ok(Seeding {
            centers: init_kmeanspp(data, spec.k, spec.seed)?,
            intermediate_size: None,
            log: None,
        }),
        Algorithm::Kmpar => {
            let cfg = InitConfig::new(spec.k, spec.oversampling, spec.rounds, spec.seed)
                .with_shards(spec.shards)
                .with_exact_l(spec.exact_l);
            let (centers, log) = init_kmeans_par(data, &cfg)?;
            Ok(Seeding {
                centers,
                intermediate_size: Some(log.intermediate_size),
                log: Some(log),
            })
        }
        Algorithm::Partition => {
            let cfg = PartitionConfig {
                groups: spec.partition_groups,
                seed: spec.seed,
                shards: spec.shards,
                ..PartitionConfig::default()
            };
            let out = init_partition(data, spec.k, &cfg)?;
            Ok(Seeding {
                centers: out.centers,
                intermediate_size: Some(out.intermediate_size),
                log: None,
            })
        }
    }
}

/// Rewrites provenance of centers picked from `intermediate` so that it
/// refers to the original dataset instead of the intermediate set.
pub(crate) fn lift_provenance(centers: &mut CenterSet, intermediate: &CenterSet) {
    for j in 0..centers.len() {
        let p = centers.provenance()[j];
        let lifted = match p.source_index {
            Some(i) => intermediate.provenance()[i],
            None => Provenance::synthetic(p.round),
        };
        centers.set_provenance(j, lifted);
    }
}

/// Index drawn with probability proportional to `masses` (all nonnegative,
/// positive total). Falls back to the last positive entry on rounding.
pub(crate) fn draw_proportional(masses: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &m) in masses.iter().enumerate() {
        if m > 0.0 {
            acc += m;
            last_positive = i;
            if acc > target {
                return i;
            }
        }
    }
    last_positive
}
