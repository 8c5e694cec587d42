//! Multi-run experiment driver.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{gen_gauss_mixture, load_table, subsample, GaussMixtureSpec, TableSchema};
use crate::error::{Error, Result};
use crate::geometry::Dataset;
use crate::init::{seed_centers, Algorithm, Rounds, SeedingSpec};
use crate::lloyd::{lloyd_run_with, LloydConfig};
use crate::parexec::{par_cost, Purpose, RngKey, ShardPlan};

/// Where an experiment's points come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    Gauss(GaussMixtureSpec),
    File {
        path: PathBuf,
        #[serde(default)]
        schema: TableSchema,
        /// Keep each row with this probability.
        #[serde(default)]
        subsample: Option<f64>,
        #[serde(default)]
        subsample_seed: u64,
    },
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Gauss(spec) => Ok(gen_gauss_mixture(spec)?.0),
            DatasetSource::File {
                path,
                schema,
                subsample: fraction,
                subsample_seed,
            } => {
                let x = load_table(path, schema)?;
                match fraction {
                    Some(f) => subsample(&x, *f, *subsample_seed),
                    None => Ok(x),
                }
            }
        }
    }
}

fn default_runs() -> usize {
    11
}

fn default_rounds() -> Rounds {
    Rounds::Fixed(5)
}

fn default_shards() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub algorithm: Algorithm,
    pub k: usize,
    /// Oversampling factor ℓ; defaults to `2k`.
    #[serde(default)]
    pub l: Option<f64>,
    #[serde(default = "default_rounds")]
    pub rounds: Rounds,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub lloyd: LloydConfig,
    #[serde(default = "default_shards")]
    pub shards: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exact_l: bool,
    /// Partition group count; defaults to `⌈√(n/k)⌉`.
    #[serde(default)]
    pub partition_groups: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource, algorithm: Algorithm, k: usize, seed: u64) -> Self {
        Self {
            dataset,
            algorithm,
            k,
            l: None,
            rounds: default_rounds(),
            runs: default_runs(),
            lloyd: LloydConfig::default(),
            shards: default_shards(),
            seed,
            exact_l: false,
            partition_groups: None,
        }
    }

    pub fn oversampling(&self) -> f64 {
        self.l.unwrap_or(2.0 * self.k as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be positive"));
        }
        if self.shards == 0 {
            return Err(Error::invalid("shards must be positive"));
        }
        self.lloyd.validate()
    }

    /// Seed of run `run`; runs use disjoint derived streams.
    pub fn run_seed(&self, run: usize) -> u64 {
        RngKey::new(self.seed, Purpose::Experiment, run as u32).derive_seed()
    }

    fn seeding(&self, run: usize) -> SeedingSpec {
        SeedingSpec {
            algorithm: self.algorithm,
            k: self.k,
            oversampling: self.oversampling(),
            rounds: self.rounds,
            exact_l: self.exact_l,
            shards: self.shards,
            partition_groups: self.partition_groups,
            seed: self.run_seed(run),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run: usize,
    pub seed: u64,
    pub seed_cost: f64,
    pub final_cost: f64,
    pub lloyd_iterations: usize,
    pub converged: bool,
    /// Pre-reclustering set size for k-means|| and Partition.
    pub intermediate_size: Option<usize>,
    pub init_wall_ms: f64,
    pub lloyd_wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub median_seed_cost: f64,
    pub median_final_cost: f64,
    pub mean_lloyd_iterations: f64,
    pub median_intermediate_size: Option<f64>,
}

impl Aggregates {
    pub fn from_rows(rows: &[RunRow]) -> Self {
        let seed: Vec<f64> = rows.iter().map(|r| r.seed_cost).collect();
        let fin: Vec<f64> = rows.iter().map(|r| r.final_cost).collect();
        let inter: Option<Vec<f64>> = rows
            .iter()
            .map(|r| r.intermediate_size.map(|s| s as f64))
            .collect();
        Self {
            median_seed_cost: median(&seed),
            median_final_cost: median(&fin),
            mean_lloyd_iterations: rows.iter().map(|r| r.lloyd_iterations as f64).sum::<f64>()
                / rows.len() as f64,
            median_intermediate_size: inter.filter(|v| !v.is_empty()).map(|v| median(&v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub n: usize,
    pub dim: usize,
    pub runs: Vec<RunRow>,
    pub aggregates: Aggregates,
}

/// Median with the mean of the two middle values for even counts; NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Seeds and refines one run.
pub fn run_once(data: &Dataset, cfg: &ExperimentConfig, run: usize) -> Result<RunRow> {
    let spec = cfg.seeding(run);
    let plan = ShardPlan::new(data.len(), cfg.shards)?;
    let t0 = Instant::now();
    let seeding = seed_centers(data, &spec)?;
    let init_wall_ms = elapsed_ms(t0);
    let seed_cost = par_cost(data, &seeding.centers, &plan)?;
    let t1 = Instant::now();
    let lloyd = lloyd_run_with(data, &seeding.centers, &cfg.lloyd, &plan)?;
    let lloyd_wall_ms = elapsed_ms(t1);
    Ok(RunRow {
        run,
        seed: spec.seed,
        seed_cost,
        final_cost: lloyd.final_cost,
        lloyd_iterations: lloyd.iterations,
        converged: lloyd.converged,
        intermediate_size: seeding.intermediate_size,
        init_wall_ms,
        lloyd_wall_ms,
    })
}

/// Runs an experiment on an already loaded dataset.
pub fn run_experiment_on(data: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.runs);
    for run in 0..cfg.runs {
        let row = run_once(data, cfg, run)?;
        log::info!(
            "{} run {run}: seed {:.6e} final {:.6e} iters {}",
            cfg.algorithm,
            row.seed_cost,
            row.final_cost,
            row.lloyd_iterations
        );
        rows.push(row);
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        n: data.len(),
        dim: data.dim(),
        aggregates: Aggregates::from_rows(&rows),
        runs: rows,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let data = cfg.dataset.load()?;
    run_experiment_on(&data, cfg)
}
