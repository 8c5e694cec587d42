use rand::seq::index;

use crate::error::Result;
use crate::geometry::{CenterSet, Dataset};
use crate::parexec::{Purpose, RngKey};

use super::check_k;

/// `k` distinct dataset points chosen uniformly without replacement.
pub fn init_random(data: &Dataset, k: usize, seed: u64) -> Result<CenterSet> {
    check_k(k, data.len())?;
    let mut rng = RngKey::new(seed, Purpose::Random, 0).rng();
    let picked = index::sample(&mut rng, data.len(), k).into_vec();
    Ok(CenterSet::from_indices(data, &picked, 0))
}
