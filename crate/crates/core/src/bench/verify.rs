//! Verification suites run by `kmpar verify` and the acceptance tests.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{cost, CenterSet, Dataset};
use crate::init::{init_kmeans_par, sample_round, seed_centers, Algorithm, InitConfig, Rounds, SeedingSpec};
use crate::lloyd::{lloyd_run, LloydConfig};
use crate::parexec::{inclusion_probability, par_sq_dists, Purpose, RngKey, ShardPlan};

use super::oracle::brute_force_optimum;
use super::theory::{check_corollary3, check_kmeanspp, check_theorem2, BoundCheck};

/// Relative slack for comparing costs computed by different summation paths.
pub const CROSS_PATH_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Theorem2,
    Corollary3,
    Oracle,
    Invariants,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "theorem2" => Ok(Suite::Theorem2),
            "corollary3" => Ok(Suite::Corollary3),
            "oracle" => Ok(Suite::Oracle),
            "invariants" => Ok(Suite::Invariants),
            _ => Err(format!("unknown suite '{s}' (expected theorem2, corollary3, oracle or invariants)")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Theorem2 => "theorem2",
            Suite::Corollary3 => "corollary3",
            Suite::Oracle => "oracle",
            Suite::Invariants => "invariants",
        })
    }
}

/// One named pass/fail outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn bound_detail(c: &BoundCheck) -> String {
    format!(
        "mean {:.6e} <= bound {:.6e} + 3*se {:.3e} (margin {:.3e})",
        c.mean, c.bound, c.se, c.margin
    )
}

/// Random instance with `n` points in `d` dimensions drawn around a few
/// well-separated centres.
pub fn tiny_instance(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let groups = rng.random_range(1..=3usize);
    let spread: f64 = rng.random_range(1.0..10.0);
    let means: Vec<Vec<f64>> = (0..groups)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut *rng);
                    spread * z
                })
                .collect::<Vec<f64>>()
        })
        .collect();
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        let m = &means[rng.random_range(0..groups)];
        for v in m {
            let z: f64 = StandardNormal.sample(&mut *rng);
            coords.push(v + z);
        }
    }
    Dataset::new(coords, d).expect("finite coordinates")
}

fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    RngKey::new(seed, Purpose::Generate, index as u32).rng()
}

fn check_seed(seed: u64, index: usize) -> u64 {
    RngKey::new(seed, Purpose::Verify, index as u32).derive_seed()
}

/// One-round contraction bound on `instances` random problems with k = 2,
/// alternating ℓ between k and 2k and starting from one or two random points.
pub fn verify_theorem2(instances: usize, trials: usize, seed: u64) -> Result<Vec<CheckLine>> {
    let k = 2;
    (0..instances)
        .map(|i| {
            let mut rng = instance_rng(seed, i);
            let n = rng.random_range(4..=12usize);
            let d = rng.random_range(1..=2usize);
            let x = tiny_instance(&mut rng, n, d);
            let ell = if i % 2 == 0 { k as f64 } else { 2.0 * k as f64 };
            let start = rand::seq::index::sample(&mut rng, n, 1 + (i / 2) % 2).into_vec();
            let c = CenterSet::from_indices(&x, &start, 0);
            let r = check_theorem2(&x, &c, ell, k, trials, check_seed(seed, i))?;
            Ok(CheckLine::new(
                format!("theorem2[{i}] n={n} l={ell} |C|={}", c.len()),
                r.check.pass,
                format!("alpha {:.4}, {}", r.theorem.alpha, bound_detail(&r.check)),
            ))
        })
        .collect()
}

/// Multi-round bound on `instances` random problems with k = 2, ℓ = 2k.
pub fn verify_corollary3(instances: usize, reps: usize, seed: u64) -> Result<Vec<CheckLine>> {
    let k = 2;
    (0..instances)
        .map(|i| {
            let mut rng = instance_rng(seed, i);
            let n = rng.random_range(4..=12usize);
            let x = tiny_instance(&mut rng, n, 2);
            let ell = if i % 2 == 0 { 2.0 * k as f64 } else { k as f64 };
            let r = check_corollary3(&x, k, ell, reps, check_seed(seed, i))?;
            let worst = r
                .rounds
                .iter()
                .min_by(|a, b| a.check.margin.total_cmp(&b.check.margin))
                .expect("at least round 0");
            Ok(CheckLine::new(
                format!("corollary3[{i}] n={n} l={ell} rounds={}", r.rounds.len() - 1),
                r.pass,
                format!("tightest round {}: {}", worst.round, bound_detail(&worst.check)),
            ))
        })
        .collect()
}

/// k-means++ mean seed cost against `8(ln k + 2)·φ*`.
pub fn verify_kmeanspp(instances: usize, trials: usize, seed: u64) -> Result<Vec<CheckLine>> {
    (0..instances)
        .map(|i| {
            let mut rng = instance_rng(seed, i);
            let n = rng.random_range(4..=10usize);
            let k = 2 + i % 2;
            let x = tiny_instance(&mut rng, n, 2);
            let r = check_kmeanspp(&x, k, trials, check_seed(seed, i))?;
            Ok(CheckLine::new(
                format!("kmeans++[{i}] n={n} k={k}"),
                r.check.pass,
                format!("phi* {:.4e}, {}", r.phi_star, bound_detail(&r.check)),
            ))
        })
        .collect()
}

/// Seed cost ≥ final cost ≥ φ* for every algorithm and run.
pub fn verify_oracle_dominance(instances: usize, runs: usize, seed: u64) -> Result<Vec<CheckLine>> {
    let algorithms = [Algorithm::Random, Algorithm::Kmpp, Algorithm::Kmpar, Algorithm::Partition];
    (0..instances)
        .map(|i| {
            let mut rng = instance_rng(seed, i);
            let n = rng.random_range(4..=10usize);
            let k = 2 + i % 2;
            let d = rng.random_range(1..=3usize);
            let x = tiny_instance(&mut rng, n, d);
            let phi_star = brute_force_optimum(&x, k)?.phi_star;
            let mut violations = Vec::new();
            let mut checked = 0;
            for alg in algorithms {
                for run in 0..runs {
                    let spec = SeedingSpec {
                        algorithm: alg,
                        k,
                        oversampling: 2.0 * k as f64,
                        rounds: Rounds::Fixed(5),
                        exact_l: false,
                        shards: 1,
                        partition_groups: None,
                        seed: check_seed(seed, i * 1000 + run),
                    };
                    let seeded = seed_centers(&x, &spec)?.centers;
                    let res = lloyd_run(&x, &seeded, &LloydConfig::default())?;
                    let seed_cost = cost(&x, &seeded)?;
                    let slack = CROSS_PATH_RTOL * seed_cost.max(phi_star);
                    checked += 1;
                    if res.final_cost > seed_cost + slack {
                        violations.push(format!("{alg} run {run}: seed {seed_cost} < final {}", res.final_cost));
                    }
                    if res.final_cost + slack < phi_star {
                        violations.push(format!("{alg} run {run}: final {} < phi* {phi_star}", res.final_cost));
                    }
                }
            }
            Ok(CheckLine::new(
                format!("dominance[{i}] n={n} k={k}"),
                violations.is_empty(),
                if violations.is_empty() {
                    format!("{checked} runs, phi* {phi_star:.6e}")
                } else {
                    violations.join("; ")
                },
            ))
        })
        .collect()
}

/// Mean per-round sample size against `Σ min(1, ℓ·w·d²/φ)` over `trials`
/// keyed rounds. Returns (expected, mean, σ of the mean).
pub fn sampling_expectation(
    data: &Dataset,
    centers: &CenterSet,
    ell: f64,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let plan = ShardPlan::serial(data.len());
    let d2 = par_sq_dists(data, centers, &plan)?;
    let phi = cost(data, centers)?;
    let (mut expected, mut var) = (0.0, 0.0);
    for (i, &d) in d2.iter().enumerate() {
        let (p, _) = inclusion_probability(ell, data.weight(i), d, phi);
        expected += p;
        var += p * (1.0 - p);
    }
    let mut total = 0usize;
    for t in 0..trials {
        let (picked, _) = sample_round(data, centers, phi, ell, RngKey::new(seed, Purpose::Verify, t as u32))?;
        total += picked.len();
    }
    Ok((expected, total as f64 / trials as f64, (var / trials as f64).sqrt()))
}

/// Shard invariance, run-to-run determinism, sampling expectation and Lloyd
/// monotonicity.
pub fn verify_invariants(seed: u64, lloyd_runs: usize) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    lines.extend(shard_invariance(seed)?);
    lines.extend(sampling_checks(seed)?);
    lines.push(lloyd_monotonicity(lloyd_runs, seed)?);
    Ok(lines)
}

pub fn shard_invariance(seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = instance_rng(seed, 0);
    let x = tiny_instance(&mut rng, 20_000, 5);
    let k = 25;
    let base = InitConfig::new(k, 2.0 * k as f64, Rounds::Fixed(5), check_seed(seed, 0));
    let mut results = Vec::new();
    for p in [1, 4, 8] {
        let (centers, log) = init_kmeans_par(&x, &base.with_shards(p))?;
        let plan = ShardPlan::new(x.len(), p)?;
        let lloyd = crate::lloyd::lloyd_run_with(&x, &centers, &LloydConfig::default(), &plan)?;
        results.push((p, centers, log, lloyd));
    }
    let (_, c1, l1, r1) = &results[0];
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let mut lines = Vec::new();
    for (p, c, l, r) in &results[1..] {
        let same_samples = l.rounds.iter().map(|r| &r.sampled).eq(l1.rounds.iter().map(|r| &r.sampled));
        let same_weights = l.intermediate_weights == l1.intermediate_weights;
        lines.push(CheckLine::new(
            format!("shards P=1 vs P={p}: sampled sets and weights"),
            same_samples && same_weights,
            format!(
                "{} rounds, intermediate size {} vs {}",
                l.rounds.len(),
                l1.intermediate_size,
                l.intermediate_size
            ),
        ));
        let mut worst: f64 = rel(l.psi, l1.psi).max(rel(l.final_seed_cost, l1.final_seed_cost));
        for (a, b) in l.rounds.iter().zip(&l1.rounds) {
            worst = worst.max(rel(a.phi_before, b.phi_before));
        }
        for (a, b) in r.cost_trace.iter().zip(&r1.cost_trace) {
            worst = worst.max(rel(*a, *b));
        }
        lines.push(CheckLine::new(
            format!("shards P=1 vs P={p}: costs within 1e-9 relative"),
            worst <= 1e-9 && c.len() == c1.len() && r.cost_trace.len() == r1.cost_trace.len(),
            format!("max relative difference {worst:.3e}"),
        ));
    }
    for p in [1, 8] {
        let cfg = base.with_shards(p);
        let (ca, la) = init_kmeans_par(&x, &cfg)?;
        let (cb, lb) = init_kmeans_par(&x, &cfg)?;
        let plan = ShardPlan::new(x.len(), p)?;
        let ra = crate::lloyd::lloyd_run_with(&x, &ca, &LloydConfig::default(), &plan)?;
        let rb = crate::lloyd::lloyd_run_with(&x, &cb, &LloydConfig::default(), &plan)?;
        lines.push(CheckLine::new(
            format!("repeat P={p}: bit-identical end to end"),
            ca == cb && la == lb && ra == rb,
            format!("final cost {:.6e}", ra.final_cost),
        ));
    }
    Ok(lines)
}

/// Mean per-round sample size, unclamped and clamped, against its expectation.
pub fn sampling_checks(seed: u64) -> Result<Vec<CheckLine>> {
    let trials = 4000;
    let mut rng = instance_rng(seed, 1);
    let x = tiny_instance(&mut rng, 2000, 3);
    let mut lines = Vec::new();
    // A single centre and a small ℓ keeps every probability below one.
    let c = CenterSet::from_indices(&x, &[0], 0);
    let ell = 5.0;
    let (expected, mean, sd) = sampling_expectation(&x, &c, ell, trials, check_seed(seed, 1))?;
    lines.push(CheckLine::new(
        "sampling: unclamped mean size vs l",
        (expected - ell).abs() <= 1e-9 * ell && (mean - ell).abs() <= 3.0 * sd,
        format!("mean {mean:.4} vs l {ell} (sum p {expected:.6}, 3 sigma {:.4})", 3.0 * sd),
    ));
    // A large ℓ saturates the far points.
    let ell = 400.0;
    let (expected, mean, sd) = sampling_expectation(&x, &c, ell, trials, check_seed(seed, 2))?;
    lines.push(CheckLine::new(
        "sampling: clamped mean size vs sum of min(1, p)",
        (mean - expected).abs() <= 3.0 * sd,
        format!("mean {mean:.4} vs expected {expected:.4} (3 sigma {:.4})", 3.0 * sd),
    ));
    Ok(lines)
}

/// Exact non-increase of every Lloyd cost trace over randomized runs.
pub fn lloyd_monotonicity(runs: usize, seed: u64) -> Result<CheckLine> {
    let mut bad = Vec::new();
    let mut steps = 0usize;
    for i in 0..runs {
        let mut rng = instance_rng(seed ^ 0x4c4c, i);
        let n = rng.random_range(2..=300usize);
        let d = rng.random_range(1..=4usize);
        let x = tiny_instance(&mut rng, n, d);
        let k = rng.random_range(1..=n.min(12));
        let init = rand::seq::index::sample(&mut rng, n, k).into_vec();
        let mut c = CenterSet::from_indices(&x, &init, 0);
        // Perturb so that starting centres are not data points.
        if i % 2 == 1 {
            let rows: Vec<Vec<f64>> = c
                .iter()
                .map(|p| p.iter().map(|v| v + rng.random_range(-3.0..3.0)).collect())
                .collect();
            c = CenterSet::from_rows(&rows)?;
        }
        let r = lloyd_run(&x, &c, &LloydConfig::default())?;
        steps += r.cost_trace.len();
        if let Some(w) = r.cost_trace.windows(2).position(|w| w[1] > w[0]) {
            bad.push(format!("run {i} step {w}"));
        }
    }
    Ok(CheckLine::new(
        format!("lloyd monotonicity over {runs} runs"),
        bad.is_empty(),
        if bad.is_empty() {
            format!("{steps} trace entries, no increase")
        } else {
            bad.join(", ")
        },
    ))
}

/// Runs one suite at the sizes used by the acceptance tests.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<CheckLine>> {
    match suite {
        Suite::Theorem2 => verify_theorem2(50, 10_000, seed),
        Suite::Corollary3 => verify_corollary3(20, 1000, seed),
        Suite::Oracle => {
            let mut lines = verify_oracle_dominance(100, 3, seed)?;
            lines.extend(verify_kmeanspp(20, 2000, seed)?);
            Ok(lines)
        }
        Suite::Invariants => verify_invariants(seed, 1000),
    }
}
