use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kmpar::bench::experiment::{run_experiment, DatasetSource, ExperimentConfig};
use kmpar::bench::sweep::{parse_l_list, parse_r_list, sweep, write_sweep_csv, SweepConfig};
use kmpar::bench::verify::{run_suite, Suite};
use kmpar::data::{gen_gauss_mixture, load_table, write_generated, Delimiter, GaussMixtureSpec, TableSchema};
use kmpar::init::{seed_centers, Algorithm, InitRunLog, Rounds, SeedingSpec};
use kmpar::lloyd::{lloyd_run_with, LloydConfig};
use kmpar::parexec::{par_cost, ShardPlan};
use kmpar::{Error, Result};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY_FAILED: u8 = 2;

/// Scalable k-means seeding and benchmarking.
#[derive(Debug, Parser)]
#[command(name = "kmpar", version)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a Gaussian mixture dataset plus a `.meta.json` sidecar.
    Gen(GenArgs),
    /// Seed and refine one clustering of a data file.
    Cluster(ClusterArgs),
    /// Run a multi-run experiment described by a JSON config.
    Bench(BenchArgs),
    /// Sweep k-means|| over a grid of rounds and oversampling factors.
    Sweep(SweepArgs),
    /// Run a verification suite; exits with status 2 if any check fails.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 15)]
    d: usize,
    /// Variance of the distribution the component means are drawn from.
    #[arg(long, required_unless_present = "r_scale", conflicts_with = "r_scale")]
    r_var: Option<f64>,
    /// Standard deviation of the component means (sets the variance to its square).
    #[arg(long)]
    r_scale: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[arg(long)]
    input: PathBuf,
    /// Field separator: auto, comma or whitespace.
    #[arg(long, default_value = "auto")]
    delimiter: Delimiter,
    /// Comma-separated indices of symbolic columns to integer-code.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<usize>,
    #[arg(long)]
    skip_header: bool,
}

impl TableArgs {
    fn schema(&self) -> TableSchema {
        TableSchema {
            delimiter: self.delimiter,
            categorical_columns: self.categorical.clone(),
            skip_header: self.skip_header,
        }
    }
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long, default_value = "kmpar")]
    init: Algorithm,
    #[arg(long)]
    k: usize,
    /// Oversampling factor; a number or a multiple of k such as `2k`.
    #[arg(long, default_value = "2k")]
    l: String,
    /// Number of rounds, or `auto` for ⌈log₂ ψ⌉.
    #[arg(long, default_value = "5")]
    rounds: Rounds,
    /// Draw exactly ℓ points per round instead of independent trials.
    #[arg(long)]
    exact_l: bool,
    /// Shard count; defaults to $KMPAR_SHARDS or the worker count.
    #[arg(long)]
    shards: Option<usize>,
    #[arg(long)]
    partition_groups: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = LloydConfig::default().tol)]
    tol: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the config's run count.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the config's shard count.
    #[arg(long)]
    shards: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long)]
    k: usize,
    /// Comma-separated oversampling factors, e.g. `k,2k,4k`.
    #[arg(long, default_value = "k,2k,4k")]
    l_list: String,
    /// Comma-separated round counts; ranges like `1..=15` are accepted.
    #[arg(long, default_value = "1..=15")]
    r_list: String,
    #[arg(long, default_value_t = 11)]
    runs: usize,
    #[arg(long)]
    exact_l: bool,
    #[arg(long)]
    shards: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = LloydConfig::default().tol)]
    tol: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Serialize)]
struct ClusterReport {
    input: PathBuf,
    n: usize,
    dim: usize,
    algorithm: Algorithm,
    k: usize,
    oversampling: f64,
    rounds: Rounds,
    exact_l: bool,
    shards: usize,
    seed: u64,
    lloyd: LloydConfig,
    seed_cost: f64,
    final_cost: f64,
    lloyd_iterations: usize,
    converged: bool,
    cost_trace: Vec<f64>,
    intermediate_size: Option<usize>,
    init_wall_ms: f64,
    lloyd_wall_ms: f64,
    centers: Vec<Vec<f64>>,
    init_log: Option<InitRunLog>,
}

fn shards_or_default(s: Option<usize>) -> usize {
    s.unwrap_or_else(ShardPlan::default_shards)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn single_l(s: &str, k: usize) -> Result<f64> {
    match parse_l_list(s, k)?.as_slice() {
        [l] => Ok(*l),
        _ => Err(Error::InvalidArgument(format!("expected one l value, got '{s}'"))),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let spec = match (a.r_var, a.r_scale) {
        (Some(r_var), _) => GaussMixtureSpec { k: a.k, d: a.d, r_var, n: a.n, seed: a.seed },
        (None, Some(scale)) => GaussMixtureSpec::with_center_scale(a.k, a.d, scale, a.n, a.seed),
        (None, None) => return Err(Error::InvalidArgument("one of --r-var or --r-scale is required".into())),
    };
    let (data, centers) = gen_gauss_mixture(&spec)?;
    let side = write_generated(&a.out, &spec, &data, &centers)?;
    eprintln!("wrote {} points to {} ({})", data.len(), a.out.display(), side.display());
    Ok(())
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let data = load_table(&a.table.input, &a.table.schema())?;
    let shards = shards_or_default(a.shards);
    let lloyd = LloydConfig { tol: a.tol, max_iters: a.max_iters };
    lloyd.validate()?;
    let spec = SeedingSpec {
        algorithm: a.init,
        k: a.k,
        oversampling: single_l(&a.l, a.k)?,
        rounds: a.rounds,
        exact_l: a.exact_l,
        shards,
        partition_groups: a.partition_groups,
        seed: a.seed,
    };
    let plan = ShardPlan::new(data.len(), shards)?;
    let t0 = Instant::now();
    let seeding = seed_centers(&data, &spec)?;
    let init_wall_ms = t0.elapsed().as_secs_f64() * 1e3;
    let seed_cost = par_cost(&data, &seeding.centers, &plan)?;
    let t1 = Instant::now();
    let res = lloyd_run_with(&data, &seeding.centers, &lloyd, &plan)?;
    let lloyd_wall_ms = t1.elapsed().as_secs_f64() * 1e3;
    let report = ClusterReport {
        input: a.table.input.clone(),
        n: data.len(),
        dim: data.dim(),
        algorithm: a.init,
        k: a.k,
        oversampling: spec.oversampling,
        rounds: a.rounds,
        exact_l: a.exact_l,
        shards,
        seed: a.seed,
        lloyd,
        seed_cost,
        final_cost: res.final_cost,
        lloyd_iterations: res.iterations,
        converged: res.converged,
        cost_trace: res.cost_trace,
        intermediate_size: seeding.intermediate_size,
        init_wall_ms,
        lloyd_wall_ms,
        centers: res.centers.to_rows(),
        init_log: seeding.log,
    };
    write_json(&a.out, &report)?;
    println!(
        "{} k={}: seed cost {:.6e}, final cost {:.6e}, {} iterations",
        a.init, a.k, report.seed_cost, report.final_cost, report.lloyd_iterations
    );
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let file = File::open(&a.config).map_err(|source| Error::Io { path: a.config.clone(), source })?;
    let mut cfg: ExperimentConfig = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", a.config.display())))?;
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(s) = a.shards {
        cfg.shards = s;
    }
    // Relative data paths resolve against the config's directory.
    if let DatasetSource::File { path, .. } = &mut cfg.dataset {
        if path.is_relative() && !path.exists() {
            if let Some(dir) = a.config.parent() {
                *path = dir.join(&*path);
            }
        }
    }
    let report = run_experiment(&cfg)?;
    write_json(&a.out, &report)?;
    let g = &report.aggregates;
    println!(
        "{} k={} over {} runs: median seed {:.6e}, median final {:.6e}, mean iterations {:.1}",
        cfg.algorithm,
        cfg.k,
        report.runs.len(),
        g.median_seed_cost,
        g.median_final_cost,
        g.mean_lloyd_iterations
    );
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let data = load_table(&a.table.input, &a.table.schema())?;
    let mut base = ExperimentConfig::new(
        DatasetSource::File {
            path: a.table.input.clone(),
            schema: a.table.schema(),
            subsample: None,
            subsample_seed: 0,
        },
        Algorithm::Kmpar,
        a.k,
        a.seed,
    );
    base.runs = a.runs;
    base.exact_l = a.exact_l;
    base.shards = shards_or_default(a.shards);
    base.lloyd = LloydConfig { tol: a.tol, max_iters: a.max_iters };
    let cfg = SweepConfig {
        base,
        l_list: parse_l_list(&a.l_list, a.k)?,
        r_list: parse_r_list(&a.r_list)?,
    };
    let rows = sweep(&data, &cfg)?;
    for row in rows.iter().filter(|r| r.under_k) {
        eprintln!(
            "flagged: r={} l={} gives r*l = {} < k = {}; fewer than k centers expected before padding",
            row.r,
            row.l,
            row.r as f64 * row.l,
            a.k
        );
    }
    let w = create(&a.out)?;
    write_sweep_csv(w, &rows)?;
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<bool> {
    let lines = run_suite(a.suite, a.seed)?;
    let failed = lines.iter().filter(|l| !l.pass).count();
    for l in &lines {
        println!("{l}");
    }
    println!("{}: {} checks, {} failed", a.suite, lines.len(), failed);
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match cli.command {
        Command::Gen(a) => gen(a).map(|_| true),
        Command::Cluster(a) => cluster(a).map(|_| true),
        Command::Bench(a) => bench(a).map(|_| true),
        Command::Sweep(a) => run_sweep(a).map(|_| true),
        Command::Verify(a) => verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
