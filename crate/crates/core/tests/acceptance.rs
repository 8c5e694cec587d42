//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Every threshold and tolerance is a constant below.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use kmpar::bench::experiment::{run_experiment_on, DatasetSource, ExperimentConfig, ExperimentReport};
use kmpar::bench::theory::alpha;
use kmpar::bench::verify::{
    lloyd_monotonicity, sampling_checks, shard_invariance, verify_corollary3, verify_kmeanspp,
    verify_oracle_dominance, verify_theorem2, CheckLine,
};
use kmpar::data::{gen_gauss_mixture, load_table, GaussMixtureSpec, TableSchema};
use kmpar::init::Algorithm;
use kmpar::parexec::{par_cost, ShardPlan};
use kmpar::{CenterSet, Dataset, Result};

/// Master seed for every criterion.
const SEED: u64 = 0;

// 1: GaussMixture.
const GAUSS_N: usize = 10_000;
const GAUSS_D: usize = 15;
const GAUSS_K: usize = 50;
const GAUSS_RUNS: usize = 11;
const GAUSS_R_HIGH: f64 = 100.0;
const GAUSS_R_LOW: f64 = 1.0;
const GAUSS_FINAL_RANGE: (f64, f64) = (13e4, 17e4);
const GAUSS_RANDOM_RATIO: f64 = 100.0;
const GAUSS_TIME_LIMIT_S: f64 = 600.0;

// 2 and 3: SPAM.
const SPAM_K: usize = 50;
const SPAM_RUNS: usize = 11;
const SPAM_FINAL_REL_GAP: f64 = 0.20;
const SPAM_RANDOM_FACTOR: f64 = 10.0;
const ITER_RUNS: usize = 10;
const ITER_KMPAR_MAX: f64 = 60.0;
const ITER_RANDOM_MIN: f64 = 100.0;

// 4-7: bounds and oracle.
const THEOREM2_INSTANCES: usize = 50;
const THEOREM2_TRIALS: usize = 10_000;
const ALPHA_AT_2K: f64 = 0.5314;
const ALPHA_TOL: f64 = 1e-4;
const COROLLARY3_INSTANCES: usize = 20;
const COROLLARY3_REPS: usize = 1_000;
const KMPP_INSTANCES: usize = 20;
const KMPP_TRIALS: usize = 2_000;
const DOMINANCE_INSTANCES: usize = 100;
const DOMINANCE_RUNS: usize = 3;

// 9: intermediate sets.
const ECONOMY_N: usize = 100_000;
const ECONOMY_K: usize = 100;
const ECONOMY_KMPAR_MAX: usize = 1_200;
const ECONOMY_PARTITION_FACTOR: f64 = 10.0;

// 11: Lloyd.
const LLOYD_RUNS: usize = 1_000;

// Executor scaling sanity check.
const SPEEDUP_N: usize = 1_000_000;
const SPEEDUP_MIN: f64 = 2.0;

struct Outcome {
    line: CheckLine,
    notes: Vec<String>,
}

fn outcome(name: &str, pass: bool, detail: String) -> Outcome {
    Outcome {
        line: CheckLine::new(name, pass, detail),
        notes: Vec::new(),
    }
}

fn from_lines(name: &str, lines: Vec<CheckLine>, summary: impl FnOnce(&[CheckLine]) -> String) -> Outcome {
    let passed = lines.iter().filter(|l| l.pass).count();
    let detail = format!("{passed}/{} pass; {}", lines.len(), summary(&lines));
    Outcome {
        line: CheckLine::new(name, passed == lines.len() && !lines.is_empty(), detail),
        notes: lines.iter().filter(|l| !l.pass).map(|l| l.to_string()).collect(),
    }
}

fn experiment(data: &Dataset, alg: Algorithm, k: usize, runs: usize) -> Result<ExperimentReport> {
    let source = DatasetSource::Gauss(GaussMixtureSpec::benchmark(k, 1.0, SEED));
    let mut cfg = ExperimentConfig::new(source, alg, k, SEED);
    cfg.runs = runs;
    run_experiment_on(data, &cfg)
}

fn mean_iterations(r: &ExperimentReport, runs: usize) -> f64 {
    r.runs[..runs].iter().map(|x| x.lloyd_iterations as f64).sum::<f64>() / runs as f64
}

/// Criterion 1. The published R values behave as the standard deviation of
/// the component means, so R maps to a variance of R².
fn gauss_mixture() -> Result<Vec<Outcome>> {
    let t0 = Instant::now();
    let high = GaussMixtureSpec::with_center_scale(GAUSS_K, GAUSS_D, GAUSS_R_HIGH, GAUSS_N, SEED);
    let (x_high, _) = gen_gauss_mixture(&high)?;
    let par_high = experiment(&x_high, Algorithm::Kmpar, GAUSS_K, GAUSS_RUNS)?;
    let rnd_high = experiment(&x_high, Algorithm::Random, GAUSS_K, GAUSS_RUNS)?;
    let low = GaussMixtureSpec::with_center_scale(GAUSS_K, GAUSS_D, GAUSS_R_LOW, GAUSS_N, SEED);
    let (x_low, _) = gen_gauss_mixture(&low)?;
    let par_low = experiment(&x_low, Algorithm::Kmpar, GAUSS_K, GAUSS_RUNS)?;
    let pp_low = experiment(&x_low, Algorithm::Kmpp, GAUSS_K, GAUSS_RUNS)?;
    let elapsed = t0.elapsed().as_secs_f64();

    let fin = par_high.aggregates.median_final_cost;
    let rnd = rnd_high.aggregates.median_final_cost;
    let in_range = (GAUSS_FINAL_RANGE.0..=GAUSS_FINAL_RANGE.1).contains(&fin);
    let ratio = rnd / fin;
    let seed_ok = par_low.aggregates.median_seed_cost <= pp_low.aggregates.median_seed_cost;
    let pass = in_range && ratio >= GAUSS_RANDOM_RATIO && seed_ok && elapsed <= GAUSS_TIME_LIMIT_S;
    let mut out = vec![outcome(
        "[1] GaussMixture k=50",
        pass,
        format!(
            "R=100: kmpar median final {:.2}e4 in [13,17]e4 = {in_range}, random/kmpar {ratio:.1} >= 100; \
             R=1: kmpar median seed {:.2}e4 <= kmpp {:.2}e4 = {seed_ok}; {elapsed:.1}s",
            fin / 1e4,
            par_low.aggregates.median_seed_cost / 1e4,
            pp_low.aggregates.median_seed_cost / 1e4
        ),
    )];

    // The literal reading, with R as the variance of the means.
    let lit = GaussMixtureSpec { k: GAUSS_K, d: GAUSS_D, r_var: GAUSS_R_HIGH, n: GAUSS_N, seed: SEED };
    let (x_lit, _) = gen_gauss_mixture(&lit)?;
    let par_lit = experiment(&x_lit, Algorithm::Kmpar, GAUSS_K, GAUSS_RUNS)?;
    let rnd_lit = experiment(&x_lit, Algorithm::Random, GAUSS_K, GAUSS_RUNS)?;
    out[0].notes.push(format!(
        "INFO variance-100 reading: kmpar median final {:.2}e4, random/kmpar {:.1}",
        par_lit.aggregates.median_final_cost / 1e4,
        rnd_lit.aggregates.median_final_cost / par_lit.aggregates.median_final_cost
    ));
    Ok(out)
}

fn spam_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/spambase.data")
}

/// Criteria 2 and 3. Run `i` depends only on `(SEED, i)`, so the first ten
/// runs of each eleven-run report are the ten-run experiment.
fn spam() -> Result<Vec<Outcome>> {
    let x = load_table(spam_path(), &TableSchema::spam())?;
    let par = experiment(&x, Algorithm::Kmpar, SPAM_K, SPAM_RUNS)?;
    let pp = experiment(&x, Algorithm::Kmpp, SPAM_K, SPAM_RUNS)?;
    let rnd = experiment(&x, Algorithm::Random, SPAM_K, SPAM_RUNS)?;

    let (fp, fpp, fr) = (
        par.aggregates.median_final_cost,
        pp.aggregates.median_final_cost,
        rnd.aggregates.median_final_cost,
    );
    let gap = (fp - fpp).abs() / fp.min(fpp);
    let (sp, spp) = (par.aggregates.median_seed_cost, pp.aggregates.median_seed_cost);
    let c2 = gap <= SPAM_FINAL_REL_GAP && fp <= fr / SPAM_RANDOM_FACTOR && fpp <= fr / SPAM_RANDOM_FACTOR && sp <= spp;
    let c2 = outcome(
        "[2] SPAM k=50 costs",
        c2,
        format!(
            "n={} d={}; median final kmpar {:.1}e5 kmpp {:.1}e5 (gap {:.1}%), random {:.1}e5; \
             median seed kmpar {:.1}e5 <= kmpp {:.1}e5",
            x.len(),
            x.dim(),
            fp / 1e5,
            fpp / 1e5,
            gap * 100.0,
            fr / 1e5,
            sp / 1e5,
            spp / 1e5
        ),
    );

    let (ip, ipp, ir) = (
        mean_iterations(&par, ITER_RUNS),
        mean_iterations(&pp, ITER_RUNS),
        mean_iterations(&rnd, ITER_RUNS),
    );
    let c3 = ip <= ipp && ipp <= ir && ip <= ITER_KMPAR_MAX && ir >= ITER_RANDOM_MIN;
    let mut c3 = outcome(
        "[3] SPAM k=50 Lloyd iterations",
        c3,
        format!("mean over {ITER_RUNS} runs: kmpar {ip:.1} <= kmpp {ipp:.1} <= random {ir:.1}; kmpar <= 60, random >= 100"),
    );
    let per_run = |r: &ExperimentReport| {
        r.runs[..ITER_RUNS].iter().map(|x| x.lloyd_iterations.to_string()).collect::<Vec<_>>().join(",")
    };
    c3.notes.push(format!(
        "INFO per-run iterations: kmpar [{}] kmpp [{}] random [{}]",
        per_run(&par),
        per_run(&pp),
        per_run(&rnd)
    ));
    Ok(vec![c2, c3])
}

fn theorem2() -> Result<Outcome> {
    let a = alpha(4.0, 2);
    let lines = verify_theorem2(THEOREM2_INSTANCES, THEOREM2_TRIALS, SEED)?;
    let mut o = from_lines("[4] one-round bound", lines, |_| {
        format!("{THEOREM2_INSTANCES} instances x {THEOREM2_TRIALS} draws; alpha(l=2k) = {a:.6}")
    });
    if (a - ALPHA_AT_2K).abs() > ALPHA_TOL {
        o.line.pass = false;
        o.notes.push(format!("alpha {a} differs from {ALPHA_AT_2K}"));
    }
    Ok(o)
}

fn corollary3() -> Result<Outcome> {
    let lines = verify_corollary3(COROLLARY3_INSTANCES, COROLLARY3_REPS, SEED)?;
    Ok(from_lines("[5] multi-round bound", lines, |_| {
        format!("{COROLLARY3_INSTANCES} instances x {COROLLARY3_REPS} repetitions, rounds 0..=ceil(log2 psi)")
    }))
}

fn kmeanspp() -> Result<Outcome> {
    let lines = verify_kmeanspp(KMPP_INSTANCES, KMPP_TRIALS, SEED)?;
    Ok(from_lines("[6] k-means++ 8(ln k + 2) bound", lines, |_| {
        format!("{KMPP_INSTANCES} instances x {KMPP_TRIALS} trials")
    }))
}

fn dominance() -> Result<Outcome> {
    let lines = verify_oracle_dominance(DOMINANCE_INSTANCES, DOMINANCE_RUNS, SEED)?;
    Ok(from_lines("[7] oracle dominance", lines, |_| {
        format!("{DOMINANCE_INSTANCES} instances x 4 algorithms x {DOMINANCE_RUNS} runs")
    }))
}

fn shards() -> Result<Outcome> {
    let lines = shard_invariance(SEED)?;
    Ok(from_lines("[8] determinism and shard invariance P in {1,4,8}", lines, |ls| {
        ls.iter().map(|l| l.detail.clone()).collect::<Vec<_>>().join("; ")
    }))
}

fn economy() -> Result<Outcome> {
    let spec = GaussMixtureSpec { k: ECONOMY_K, d: GAUSS_D, r_var: 100.0, n: ECONOMY_N, seed: SEED };
    let (x, _) = gen_gauss_mixture(&spec)?;
    let par = experiment_seed_only(&x, Algorithm::Kmpar)?;
    let part = experiment_seed_only(&x, Algorithm::Partition)?;
    let ratio = part as f64 / par as f64;
    Ok(outcome(
        "[9] intermediate-set economy n=1e5 k=100",
        par <= ECONOMY_KMPAR_MAX && ratio >= ECONOMY_PARTITION_FACTOR,
        format!("kmpar {par} <= {ECONOMY_KMPAR_MAX}; partition {part} = {ratio:.1}x >= {ECONOMY_PARTITION_FACTOR}x"),
    ))
}

fn experiment_seed_only(x: &Dataset, alg: Algorithm) -> Result<usize> {
    let spec = kmpar::SeedingSpec {
        algorithm: alg,
        k: ECONOMY_K,
        oversampling: 2.0 * ECONOMY_K as f64,
        rounds: kmpar::Rounds::Fixed(5),
        exact_l: false,
        shards: 1,
        partition_groups: None,
        seed: SEED,
    };
    Ok(kmpar::seed_centers(x, &spec)?.intermediate_size.expect("intermediate size"))
}

fn sampling() -> Result<Outcome> {
    let lines = sampling_checks(SEED)?;
    Ok(from_lines("[10] sampling expectation", lines, |ls| {
        ls.iter().map(|l| l.detail.clone()).collect::<Vec<_>>().join("; ")
    }))
}

fn monotone() -> Result<Outcome> {
    let l = lloyd_monotonicity(LLOYD_RUNS, SEED)?;
    Ok(Outcome {
        line: CheckLine::new("[11] Lloyd monotonicity", l.pass, l.detail),
        notes: Vec::new(),
    })
}

fn speedup() -> Result<Option<Outcome>> {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    if cores < 2 {
        println!("SKIP executor speedup: {cores} hardware thread available, needs at least 2");
        return Ok(None);
    }
    let spec = GaussMixtureSpec { k: 20, d: 8, r_var: 100.0, n: SPEEDUP_N, seed: SEED };
    let (x, c) = gen_gauss_mixture(&spec)?;
    let c: CenterSet = c;
    let time = |p: usize| -> Result<f64> {
        let plan = ShardPlan::new(x.len(), p)?;
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            std::hint::black_box(par_cost(&x, &c, &plan)?);
            best = best.min(t.elapsed().as_secs_f64());
        }
        Ok(best)
    };
    let serial = time(1)?;
    let parallel = time(cores)?;
    let gain = serial / parallel;
    Ok(Some(outcome(
        "[parexec] cost speedup",
        gain >= SPEEDUP_MIN,
        format!("P=1 {serial:.3}s, P={cores} {parallel:.3}s, speedup {gain:.2} >= {SPEEDUP_MIN}"),
    )))
}

fn main() -> ExitCode {
    let start = Instant::now();
    type Criterion = fn() -> Result<Vec<Outcome>>;
    let criteria: [(&str, Criterion); 11] = [
        ("[1]", gauss_mixture),
        ("[2-3]", spam),
        ("[4]", || theorem2().map(|o| vec![o])),
        ("[5]", || corollary3().map(|o| vec![o])),
        ("[6]", || kmeanspp().map(|o| vec![o])),
        ("[7]", || dominance().map(|o| vec![o])),
        ("[8]", || shards().map(|o| vec![o])),
        ("[9]", || economy().map(|o| vec![o])),
        ("[10]", || sampling().map(|o| vec![o])),
        ("[11]", || monotone().map(|o| vec![o])),
        ("[parexec]", || speedup().map(|o| o.into_iter().collect())),
    ];
    let (mut passed, mut failed) = (0, 0);
    for (tag, run) in criteria {
        let t = Instant::now();
        match run() {
            Ok(outcomes) => {
                for o in outcomes {
                    println!("{} ({:.1}s)", o.line, t.elapsed().as_secs_f64());
                    for n in &o.notes {
                        println!("    {n}");
                    }
                    if o.line.pass {
                        passed += 1;
                    } else {
                        failed += 1;
                    }
                }
            }
            Err(e) => {
                println!("FAIL {tag}: error {e}");
                failed += 1;
            }
        }
    }
    println!(
        "acceptance: {passed} passed, {failed} failed in {:.1}s",
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
