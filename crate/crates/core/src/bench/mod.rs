//! Experiment harness: exact optimum oracle, bound checkers, multi-run
//! driver, parameter sweeps and verification suites.

pub mod experiment;
pub mod oracle;
pub mod sweep;
pub mod theory;
pub mod verify;

pub use experiment::{
    median, run_experiment, run_experiment_on, Aggregates, DatasetSource, ExperimentConfig,
    ExperimentReport, RunRow,
};
pub use oracle::{brute_force_optimum, OracleResult};
pub use sweep::{sweep, SweepConfig, SweepRow};
pub use theory::{alpha, check_corollary3, check_kmeanspp, check_theorem2, Theorem2Bound};
pub use verify::{run_suite, CheckLine, Suite};
