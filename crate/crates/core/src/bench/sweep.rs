//! Grid sweeps over the number of rounds and the oversampling factor.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Dataset;
use crate::init::{Algorithm, Rounds};

use super::experiment::{median, run_once, ExperimentConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Shared settings; its `algorithm`, `l` and `rounds` are overridden per cell.
    pub base: ExperimentConfig,
    pub l_list: Vec<f64>,
    pub r_list: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: u32,
    pub l: f64,
    pub median_final_cost: f64,
    /// `r·ℓ < k`: too few expected samples to reach k centers.
    pub under_k: bool,
}

/// Runs k-means|| plus Lloyd for every `(r, ℓ)` cell, `runs` times each.
///
/// Run `i` uses the same derived seed in every cell, so neighbouring cells
/// differ only through `r` and `ℓ`.
pub fn sweep(data: &Dataset, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.l_list.is_empty() || cfg.r_list.is_empty() {
        return Err(Error::invalid("sweep grid must have at least one r and one l"));
    }
    let mut rows = Vec::with_capacity(cfg.l_list.len() * cfg.r_list.len());
    for &l in &cfg.l_list {
        for &r in &cfg.r_list {
            let exp = ExperimentConfig {
                algorithm: Algorithm::Kmpar,
                l: Some(l),
                rounds: Rounds::Fixed(r),
                ..cfg.base.clone()
            };
            exp.validate()?;
            let finals = (0..exp.runs)
                .map(|run| run_once(data, &exp, run).map(|row| row.final_cost))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(SweepRow {
                r,
                l,
                median_final_cost: median(&finals),
                under_k: (r as f64) * l < exp.k as f64,
            });
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with header `r,l,median_final_cost`.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "l", "median_final_cost"])?;
    for row in rows {
        w.write_record([row.r.to_string(), row.l.to_string(), row.median_final_cost.to_string()])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Parses a comma-separated list of oversampling factors. Entries may be
/// plain numbers or multiples of k such as `2k` or `0.5k`.
pub fn parse_l_list(s: &str, k: usize) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (num, scale) = match t.strip_suffix('k') {
                Some("") => ("1", k as f64),
                Some(m) => (m, k as f64),
                None => (t, 1.0),
            };
            num.parse::<f64>()
                .ok()
                .map(|v| v * scale)
                .filter(|v| v.is_finite() && *v > 0.0)
                .ok_or_else(|| Error::invalid(format!("invalid l value '{t}'")))
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(Error::invalid("empty l list"))
            } else {
                Ok(v)
            }
        })
}

/// Parses rounds as a comma-separated list with optional `a..b` or `a..=b`
/// ranges.
pub fn parse_r_list(s: &str) -> Result<Vec<u32>> {
    let bad = |t: &str| Error::invalid(format!("invalid r value '{t}'"));
    let mut out = Vec::new();
    for t in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, b)) = t.split_once("..") {
            let (b, inclusive) = match b.strip_prefix('=') {
                Some(b) => (b, true),
                None => (b, false),
            };
            let a: u32 = a.trim().parse().map_err(|_| bad(t))?;
            let b: u32 = b.trim().parse().map_err(|_| bad(t))?;
            let end = if inclusive { b } else { b.saturating_sub(1) };
            out.extend(a..=end);
        } else {
            out.push(t.parse().map_err(|_| bad(t))?);
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(Error::invalid("r list must be nonempty and positive"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::experiment::DatasetSource;
    use crate::data::{gen_gauss_mixture, GaussMixtureSpec};

    fn cfg(k: usize, l_list: Vec<f64>, r_list: Vec<u32>, exact_l: bool) -> SweepConfig {
        let spec = GaussMixtureSpec { k, d: 2, r_var: 1.0, n: 1, seed: 0 };
        let mut base = ExperimentConfig::new(DatasetSource::Gauss(spec), Algorithm::Kmpar, k, 4);
        base.runs = 3;
        base.exact_l = exact_l;
        SweepConfig { base, l_list, r_list }
    }

    #[test]
    fn grid_shape_and_flags() {
        let (x, _) = gen_gauss_mixture(&GaussMixtureSpec { k: 10, d: 2, r_var: 30.0, n: 300, seed: 1 }).unwrap();
        let k = 10;
        let ls = vec![k as f64, 2.0 * k as f64, 4.0 * k as f64];
        let rs: Vec<u32> = (1..=15).collect();
        let mut c = cfg(k, ls, rs, false);
        c.base.runs = 1;
        let rows = sweep(&x, &c).unwrap();
        assert_eq!(rows.len(), 45);
        assert!(rows.iter().all(|r| !r.under_k));

        let rows = sweep(&x, &cfg(k, vec![2.0], vec![1, 5, 6], false)).unwrap();
        let flags: Vec<bool> = rows.iter().map(|r| r.under_k).collect();
        assert_eq!(flags, vec![true, false, false]);
    }

    #[test]
    fn exact_l_cost_trends_down_with_rounds() {
        let k = 20;
        let (x, _) = gen_gauss_mixture(&GaussMixtureSpec { k, d: 5, r_var: 100.0, n: 3000, seed: 7 }).unwrap();
        let mut c = cfg(k, vec![k as f64], (1..=8).collect(), true);
        c.base.runs = 7;
        let rows = sweep(&x, &c).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| r.median_final_cost).collect();
        // Least-squares slope of median cost against r.
        let n = y.len() as f64;
        let xs: Vec<f64> = rows.iter().map(|r| r.r as f64).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let slope = xs.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
            / xs.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
        assert!(slope <= 0.0, "slope {slope}, medians {y:?}");
        assert!(y.last().unwrap() <= y.first().unwrap(), "{y:?}");
    }

    #[test]
    fn csv_header_and_rows() {
        let rows = [
            SweepRow { r: 1, l: 20.0, median_final_cost: 3.5, under_k: false },
            SweepRow { r: 2, l: 40.0, median_final_cost: 1.25, under_k: true },
        ];
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "r,l,median_final_cost\n1,20,3.5\n2,40,1.25\n");
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_l_list("k,2k, 4k", 50).unwrap(), vec![50.0, 100.0, 200.0]);
        assert_eq!(parse_l_list("0.5k,7", 10).unwrap(), vec![5.0, 7.0]);
        assert!(parse_l_list("x", 10).is_err());
        assert!(parse_l_list("", 10).is_err());
        assert!(parse_l_list("-2", 10).is_err());
        assert_eq!(parse_r_list("1..=3,5").unwrap(), vec![1, 2, 3, 5]);
        assert_eq!(parse_r_list("1..4").unwrap(), vec![1, 2, 3]);
        assert!(parse_r_list("0").is_err());
        assert!(parse_r_list("a").is_err());
    }
}
