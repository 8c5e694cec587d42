use rand::Rng;

use crate::error::Result;
use crate::geometry::{sq_dist_unchecked, CenterSet, Dataset};
use crate::parexec::{Purpose, RngKey};

use super::{check_k, draw_proportional};

/// Sequential D² seeding.
///
/// The first center is drawn proportionally to point weight (uniformly for
/// unweighted data); each further center is drawn with probability
/// proportional to `w_x · d²(x, C)`. If that mass vanishes before `k`
/// centers exist, the rest are drawn uniformly among unchosen indices.
pub fn init_kmeanspp(data: &Dataset, k: usize, seed: u64) -> Result<CenterSet> {
    let n = data.len();
    check_k(k, n)?;
    let mut rng = RngKey::new(seed, Purpose::KMeansPlusPlus, 0).rng();

    let first = match data.weights() {
        None => rng.random_range(0..n),
        Some(w) => draw_proportional(w, data.total_weight(), rng.random()),
    };
    let mut centers = CenterSet::new(data.dim());
    centers.push_index(data, first, 0);
    let mut chosen = vec![false; n];
    chosen[first] = true;

    let mut mass: Vec<f64> = (0..n)
        .map(|i| data.weight(i) * sq_dist_unchecked(data.point(i), data.point(first)))
        .collect();
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist_unchecked(data.point(i), data.point(first)))
        .collect();

    while centers.len() < k {
        let total: f64 = mass.iter().sum();
        let next = if total > 0.0 {
            draw_proportional(&mass, total, rng.random())
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[next] = true;
        centers.push_index(data, next, centers.len() as u32);
        let c = data.point(next);
        for i in 0..n {
            let d = sq_dist_unchecked(data.point(i), c);
            if d < d2[i] {
                d2[i] = d;
                mass[i] = data.weight(i) * d;
            }
        }
        mass[next] = 0.0;
    }
    Ok(centers)
}
