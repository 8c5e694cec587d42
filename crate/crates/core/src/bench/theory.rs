//! Monte-Carlo checks of the k-means|| per-round contraction bound, its
//! multi-round consequence, and the k-means++ approximation guarantee.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cost, CenterSet, Dataset};
use crate::init::{draw_proportional, init_kmeanspp, sample_round, Rounds};
use crate::parexec::{Purpose, RngKey};

use super::oracle::brute_force_optimum;

/// Slack, in standard errors, granted to Monte-Carlo means.
pub const SE_SLACK: f64 = 3.0;

/// Per-round residual-cost factor `α = exp(−(1 − e^{−ℓ/(2k)}))`.
pub fn alpha(ell: f64, k: usize) -> f64 {
    (-(1.0 - (-ell / (2.0 * k as f64)).exp())).exp()
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Bound {
    pub ell: f64,
    pub k: usize,
    pub alpha: f64,
    pub phi_star: f64,
    pub phi_current: f64,
    /// `8φ* + ((1+α)/2)·φ_X(C)`.
    pub bound: f64,
}

impl Theorem2Bound {
    pub fn new(ell: f64, k: usize, phi_star: f64, phi_current: f64) -> Self {
        let alpha = alpha(ell, k);
        Self {
            ell,
            k,
            alpha,
            phi_star,
            phi_current,
            bound: 8.0 * phi_star + 0.5 * (1.0 + alpha) * phi_current,
        }
    }
}

/// Outcome of comparing a Monte-Carlo mean against a closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub bound: f64,
    pub mean: f64,
    pub se: f64,
    /// `bound + 3·se − mean`; nonnegative iff the check passes.
    pub margin: f64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn new(bound: f64, mean: f64, se: f64) -> Self {
        let margin = bound + SE_SLACK * se - mean;
        Self {
            bound,
            mean,
            se,
            margin,
            pass: margin >= 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Check {
    pub theorem: Theorem2Bound,
    pub check: BoundCheck,
}

/// Estimates `E[φ_X(C ∪ C′)]` over `trials` independent sampling rounds
/// started from `centers`, and compares it with the one-round bound.
pub fn check_theorem2(
    data: &Dataset,
    centers: &CenterSet,
    ell: f64,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<Theorem2Check> {
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let phi_star = brute_force_optimum(data, k)?.phi_star;
    let phi = cost(data, centers)?;
    let theorem = Theorem2Bound::new(ell, k, phi_star, phi);
    if phi == 0.0 {
        return Ok(Theorem2Check {
            theorem,
            check: BoundCheck::new(theorem.bound, 0.0, 0.0),
        });
    }
    let mut after = Vec::with_capacity(trials);
    for t in 0..trials {
        let key = RngKey::new(seed, Purpose::Verify, t as u32);
        let (picked, _) = sample_round(data, centers, phi, ell, key)?;
        let mut grown = centers.clone();
        for i in picked {
            grown.push_index(data, i, 1);
        }
        after.push(cost(data, &grown)?);
    }
    let (mean, se) = mean_se(&after);
    Ok(Theorem2Check {
        theorem,
        check: BoundCheck::new(theorem.bound, mean, se),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary3Round {
    /// Rounds completed (0 means just the first center).
    pub round: u32,
    /// `((1+α)/2)^i · E[ψ] + 16/(1−α) · φ*`.
    pub check: BoundCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary3Check {
    pub alpha: f64,
    pub phi_star: f64,
    /// Expected cost after the first center, averaged exactly over its
    /// distribution.
    pub expected_psi: f64,
    pub rounds: Vec<Corollary3Round>,
    pub pass: bool,
}

/// Runs the first-center pick plus `⌈log₂ E[ψ]⌉` sampling rounds `reps`
/// times, and compares the mean cost after each round with the bound.
pub fn check_corollary3(data: &Dataset, k: usize, ell: f64, reps: usize, seed: u64) -> Result<Corollary3Check> {
    if reps == 0 {
        return Err(Error::invalid("reps must be positive"));
    }
    let phi_star = brute_force_optimum(data, k)?.phi_star;
    let n = data.len();
    let total_w = data.total_weight();
    let mut expected_psi = 0.0;
    for c in 0..n {
        let single = CenterSet::from_indices(data, &[c], 0);
        expected_psi += data.weight(c) / total_w * cost(data, &single)?;
    }
    let rounds = Rounds::Auto.resolve(expected_psi);
    let a = alpha(ell, k);

    let mut per_round = vec![Vec::with_capacity(reps); rounds as usize + 1];
    for rep in 0..reps {
        let rep_seed = RngKey::new(seed, Purpose::Verify, rep as u32).derive_seed();
        let mut first_rng = RngKey::new(rep_seed, Purpose::FirstCenter, 0).rng();
        let first = draw_proportional(
            data.weights().unwrap_or(&vec![1.0; n]),
            total_w,
            rand::Rng::random(&mut first_rng),
        );
        let mut centers = CenterSet::from_indices(data, &[first], 0);
        let mut phi = cost(data, &centers)?;
        per_round[0].push(phi);
        for t in 0..rounds {
            if phi > 0.0 {
                let key = RngKey::new(rep_seed, Purpose::Sample, t);
                let (picked, _) = sample_round(data, &centers, phi, ell, key)?;
                for i in picked {
                    centers.push_index(data, i, t + 1);
                }
                phi = cost(data, &centers)?;
            }
            per_round[t as usize + 1].push(phi);
        }
    }

    let checks: Vec<Corollary3Round> = per_round
        .iter()
        .enumerate()
        .map(|(i, costs)| {
            let (mean, se) = mean_se(costs);
            let bound = (0.5 * (1.0 + a)).powi(i as i32) * expected_psi + 16.0 / (1.0 - a) * phi_star;
            Corollary3Round {
                round: i as u32,
                check: BoundCheck::new(bound, mean, se),
            }
        })
        .collect();
    Ok(Corollary3Check {
        alpha: a,
        phi_star,
        expected_psi,
        pass: checks.iter().all(|r| r.check.pass),
        rounds: checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansppCheck {
    pub phi_star: f64,
    /// `8(ln k + 2)·φ*`.
    pub check: BoundCheck,
}

/// Mean k-means++ seed cost over `trials` seeds against `8(ln k + 2)·φ*`.
pub fn check_kmeanspp(data: &Dataset, k: usize, trials: usize, seed: u64) -> Result<KmeansppCheck> {
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let phi_star = brute_force_optimum(data, k)?.phi_star;
    let mut costs = Vec::with_capacity(trials);
    for t in 0..trials {
        let s = RngKey::new(seed, Purpose::Verify, t as u32).derive_seed();
        costs.push(cost(data, &init_kmeanspp(data, k, s)?)?);
    }
    let (mean, se) = mean_se(&costs);
    let bound = 8.0 * ((k as f64).ln() + 2.0) * phi_star;
    Ok(KmeansppCheck {
        phi_star,
        check: BoundCheck::new(bound, mean, se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_closed_form() {
        // exp(−(1 − 1/e)) evaluated independently.
        let expected = (-(1.0 - 1.0 / std::f64::consts::E)).exp();
        assert!((alpha(4.0, 2) - expected).abs() < 1e-15);
        // 0.531463..., quoted elsewhere truncated to 0.5314.
        assert!((alpha(4.0, 2) - 0.5314).abs() < 1e-4);
    }

    #[test]
    fn alpha_in_unit_interval_and_decreasing() {
        let mut prev = 1.0;
        for i in 1..200 {
            let ratio = i as f64 * 0.05;
            let a = alpha(ratio * 10.0, 10);
            assert!(a > 0.0 && a < 1.0);
            assert!(a < prev, "ratio {ratio}");
            prev = a;
        }
    }

    #[test]
    fn mean_se_matches_hand_values() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // Sample variance 5/3, se = sqrt(5/12).
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn covered_dataset_is_trivially_within_bound() {
        let x = Dataset::from_scalars(&[0.0, 1.0, 5.0]).unwrap();
        let c = CenterSet::from_indices(&x, &[0, 1, 2], 0);
        let r = check_theorem2(&x, &c, 4.0, 2, 10, 0).unwrap();
        assert_eq!(r.check.mean, 0.0);
        assert!(r.check.pass);
    }

    #[test]
    fn theorem2_holds_on_a_small_instance() {
        let x = Dataset::from_scalars(&[0.0, 0.5, 1.0, 9.0, 9.5, 20.0, 21.0]).unwrap();
        let c = CenterSet::from_indices(&x, &[0], 0);
        let r = check_theorem2(&x, &c, 4.0, 2, 2000, 5).unwrap();
        assert!(r.check.pass, "{r:?}");
        assert!(r.check.mean < r.theorem.phi_current);
    }

    #[test]
    fn corollary3_round_zero_is_expected_psi() {
        let x = Dataset::from_scalars(&[0.0, 1.0, 2.0, 10.0, 11.0]).unwrap();
        let r = check_corollary3(&x, 2, 4.0, 400, 3).unwrap();
        assert!(r.rounds[0].check.bound >= r.expected_psi);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn corollary3_zero_optimum_decays_to_zero() {
        let x = Dataset::from_scalars(&[0.0, 0.0, 5.0, 5.0]).unwrap();
        let r = check_corollary3(&x, 2, 4.0, 200, 1).unwrap();
        assert_eq!(r.phi_star, 0.0);
        assert_eq!(r.rounds.last().unwrap().check.mean, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn kmeanspp_bound_holds_on_a_small_instance() {
        let x = Dataset::from_scalars(&[0.0, 1.0, 4.0, 5.0, 11.0, 12.0, 13.0]).unwrap();
        let r = check_kmeanspp(&x, 3, 500, 8).unwrap();
        assert!(r.check.pass, "{r:?}");
        assert!(r.check.mean >= r.phi_star);
    }
}
