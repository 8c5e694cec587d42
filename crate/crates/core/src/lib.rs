//! Scalable k-means seeding: k-means|| alongside k-means++, uniform random
//! and streaming Partition baselines, a Lloyd engine, a deterministic sharded
//! executor, dataset tooling and an experiment harness.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod data;
pub mod error;
pub mod geometry;
pub mod init;
pub mod lloyd;
pub mod parexec;

pub use error::{Error, Result};
pub use geometry::{assign, cost, nearest, sq_dist, Assignment, CenterSet, Dataset, Provenance};
pub use init::{
    init_kmeans_par, init_kmeanspp, init_partition, init_random, seed_centers, Algorithm,
    InitConfig, InitRunLog, Rounds, SeedingSpec, WeightedCenters,
};
pub use lloyd::{lloyd_run, lloyd_step, LloydConfig, LloydResult};
pub use parexec::{Purpose, RngKey, ShardPlan};
