//! Dataset acquisition: the synthetic Gaussian mixture, delimited text
//! tables, and reproducible subsampling.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CenterSet, Dataset};
use crate::parexec::{Purpose, RngKey};

/// Mixture of `k` unit-variance spherical Gaussians whose means are drawn
/// from `N(0, r_var · I_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussMixtureSpec {
    pub k: usize,
    pub d: usize,
    /// Variance of the distribution the component means are drawn from.
    pub r_var: f64,
    pub n: usize,
    pub seed: u64,
}

impl GaussMixtureSpec {
    /// The benchmark shape: 15 dimensions, 10,000 points.
    pub fn benchmark(k: usize, r_var: f64, seed: u64) -> Self {
        Self {
            k,
            d: 15,
            r_var,
            n: 10_000,
            seed,
        }
    }

    /// Means drawn with standard deviation `scale` per coordinate, i.e.
    /// `r_var = scale²`.
    pub fn with_center_scale(k: usize, d: usize, scale: f64, n: usize, seed: u64) -> Self {
        Self {
            k,
            d,
            r_var: scale * scale,
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.d == 0 || self.n == 0 {
            return Err(Error::invalid("k, d and n must be positive"));
        }
        if !(self.r_var > 0.0 && self.r_var.is_finite()) {
            return Err(Error::invalid("r_var must be positive and finite"));
        }
        Ok(())
    }
}

/// Samples a dataset and returns it with the true component means.
pub fn gen_gauss_mixture(spec: &GaussMixtureSpec) -> Result<(Dataset, CenterSet)> {
    spec.validate()?;
    let mut rng = RngKey::new(spec.seed, Purpose::Generate, 0).rng();
    let scale = spec.r_var.sqrt();
    let mut means = CenterSet::new(spec.d);
    let mut buf = vec![0.0; spec.d];
    for _ in 0..spec.k {
        for v in buf.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = scale * z;
        }
        means.push(&buf, crate::geometry::Provenance::synthetic(0))?;
    }
    let mut coords = Vec::with_capacity(spec.n * spec.d);
    for _ in 0..spec.n {
        let c = means.get(rng.random_range(0..spec.k));
        for &m in c {
            let z: f64 = StandardNormal.sample(&mut rng);
            coords.push(m + z);
        }
    }
    Ok((Dataset::new(coords, spec.d)?, means))
}

/// Field separator of a text table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    /// Comma if the first data line contains one, whitespace otherwise.
    #[default]
    Auto,
    Comma,
    Whitespace,
}

impl std::str::FromStr for Delimiter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Delimiter::Auto),
            "comma" | "," => Ok(Delimiter::Comma),
            "whitespace" | "space" | "tab" => Ok(Delimiter::Whitespace),
            _ => Err(format!("unknown delimiter '{s}' (expected auto, comma or whitespace)")),
        }
    }
}

/// How to read a delimited text table.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TableSchema {
    #[serde(default)]
    pub delimiter: Delimiter,
    /// Columns holding symbols; each distinct symbol becomes an integer code
    /// in order of first appearance.
    #[serde(default)]
    pub categorical_columns: Vec<usize>,
    #[serde(default)]
    pub skip_header: bool,
}

impl TableSchema {
    /// Spambase: 58 comma-separated numeric columns (57 features plus the label).
    pub fn spam() -> Self {
        Self {
            delimiter: Delimiter::Comma,
            ..Self::default()
        }
    }

    /// KDD Cup 1999: 42 comma-separated columns; protocol, service, flag and
    /// the trailing label are symbolic.
    pub fn kddcup() -> Self {
        Self {
            delimiter: Delimiter::Comma,
            categorical_columns: vec![1, 2, 3, 41],
            skip_header: false,
        }
    }
}

fn split_fields(line: &str, delim: Delimiter) -> Vec<&str> {
    match delim {
        Delimiter::Comma => line.split(',').map(str::trim).collect(),
        Delimiter::Whitespace | Delimiter::Auto => line.split_whitespace().collect(),
    }
}

/// Streams a delimited table into a dataset, one point per non-blank line.
pub fn load_table(path: impl AsRef<Path>, schema: &TableSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut delim = schema.delimiter;
    let mut dim = None;
    let mut coords = Vec::new();
    let mut codes: HashMap<usize, HashMap<String, usize>> = schema
        .categorical_columns
        .iter()
        .map(|&c| (c, HashMap::new()))
        .collect();
    let mut header_pending = schema.skip_header;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        if delim == Delimiter::Auto {
            delim = if line.contains(',') {
                Delimiter::Comma
            } else {
                Delimiter::Whitespace
            };
        }
        let fields = split_fields(line, delim);
        let width = *dim.get_or_insert(fields.len());
        if fields.len() != width {
            return Err(parse_err(
                lineno,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        for (col, tok) in fields.into_iter().enumerate() {
            let value = match codes.get_mut(&col) {
                Some(table) => {
                    let next = table.len();
                    *table.entry(tok.to_owned()).or_insert(next) as f64
                }
                None => tok
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        parse_err(lineno, format!("column {col}: '{tok}' is not a finite number"))
                    })?,
            };
            coords.push(value);
        }
    }

    let dim = dim.ok_or_else(|| Error::invalid(format!("{} contains no data rows", path.display())))?;
    if dim == 0 {
        return Err(Error::invalid(format!("{} has zero columns", path.display())));
    }
    Dataset::new(coords, dim)
}

/// Keeps each point independently with probability `fraction`; the decision
/// for point `i` depends only on `(seed, i)`.
pub fn subsample(data: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid("fraction must lie in (0, 1]"));
    }
    let kept: Vec<usize> = RngKey::new(seed, Purpose::Subsample, 0)
        .uniforms_from(0)
        .take(data.len())
        .enumerate()
        .filter(|&(_, u)| u < fraction)
        .map(|(i, _)| i)
        .collect();
    if kept.is_empty() {
        return Err(Error::Degenerate("subsample kept no points".into()));
    }
    data.select(&kept)
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                w.write_all(b",").map_err(|e| Error::io(path, e))?;
            }
            first = false;
            // `{}` on f64 prints the shortest string that round-trips.
            write!(w, "{v}").map_err(|e| Error::io(path, e))?;
        }
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes one comma-separated line per point.
pub fn write_table(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    write_rows(path.as_ref(), data.points())
}

/// Sidecar describing a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedMeta {
    pub spec: GaussMixtureSpec,
    pub seed: u64,
    pub true_centers: Vec<Vec<f64>>,
}

/// Path of the metadata sidecar for a data file: `<file>.meta.json`.
pub fn sidecar_path(data_path: &Path) -> PathBuf {
    let mut s = data_path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the data file plus its JSON sidecar; returns the sidecar path.
pub fn write_generated(
    path: impl AsRef<Path>,
    spec: &GaussMixtureSpec,
    data: &Dataset,
    true_centers: &CenterSet,
) -> Result<PathBuf> {
    let path = path.as_ref();
    write_table(path, data)?;
    let meta = GeneratedMeta {
        spec: *spec,
        seed: spec.seed,
        true_centers: true_centers.to_rows(),
    };
    let side = sidecar_path(path);
    let file = File::create(&side).map_err(|e| Error::io(&side, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &meta)?;
    Ok(side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::cost;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn gauss_mixture_shape_and_determinism() {
        let spec = GaussMixtureSpec { k: 5, d: 3, r_var: 10.0, n: 200, seed: 1 };
        let (x, c) = gen_gauss_mixture(&spec).unwrap();
        assert_eq!((x.len(), x.dim()), (200, 3));
        assert_eq!((c.len(), c.dim()), (5, 3));
        let (x2, c2) = gen_gauss_mixture(&spec).unwrap();
        assert_eq!(x, x2);
        assert_eq!(c, c2);
        let (x3, _) = gen_gauss_mixture(&GaussMixtureSpec { seed: 2, ..spec }).unwrap();
        assert_ne!(x, x3);
    }

    #[test]
    fn tiny_variance_collapses_means() {
        let spec = GaussMixtureSpec { k: 10, d: 4, r_var: 1e-12, n: 10, seed: 3 };
        let (_, c) = gen_gauss_mixture(&spec).unwrap();
        assert!(c.coords().iter().all(|v| v.abs() < 1e-4));
    }

    #[test]
    fn true_centers_cost_is_about_n_times_d() {
        // Σ of n·d squared unit normals: mean n·d, sd √(2nd) ≈ 548 for 150,000.
        let spec = GaussMixtureSpec::benchmark(50, 100.0, 4);
        let (x, c) = gen_gauss_mixture(&spec).unwrap();
        let ratio = cost(&x, &c).unwrap() / (10_000.0 * 15.0);
        assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    }

    #[test]
    fn center_scale_is_standard_deviation() {
        let spec = GaussMixtureSpec::with_center_scale(400, 15, 10.0, 1, 5);
        assert_eq!(spec.r_var, 100.0);
        let (_, c) = gen_gauss_mixture(&spec).unwrap();
        let var = c.coords().iter().map(|v| v * v).sum::<f64>() / c.coords().len() as f64;
        // 6000 squared N(0, 100) draws: relative sd of the mean is √(2/6000) ≈ 1.8%.
        assert!((var / 100.0 - 1.0).abs() < 0.06, "{var}");
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(gen_gauss_mixture(&GaussMixtureSpec { k: 0, d: 1, r_var: 1.0, n: 1, seed: 0 }).is_err());
        assert!(gen_gauss_mixture(&GaussMixtureSpec { k: 1, d: 1, r_var: 0.0, n: 1, seed: 0 }).is_err());
    }

    #[test]
    fn load_simple_comma_table() {
        let f = write("0,1\n2,3\n");
        let x = load_table(f.path(), &TableSchema::default()).unwrap();
        assert_eq!((x.len(), x.dim()), (2, 2));
        assert_eq!(x.coords(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn load_whitespace_with_header_and_blank_lines() {
        let f = write("a b c\n1 2 3\n\n 4\t5 6 \n");
        let schema = TableSchema {
            delimiter: Delimiter::Whitespace,
            skip_header: true,
            ..Default::default()
        };
        let x = load_table(f.path(), &schema).unwrap();
        assert_eq!(x.coords(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn categorical_codes_follow_first_appearance() {
        let f = write("1,tcp,5\n2,udp,6\n3,tcp,7\n4,icmp,8\n");
        let schema = TableSchema {
            categorical_columns: vec![1],
            ..Default::default()
        };
        let x = load_table(f.path(), &schema).unwrap();
        let col: Vec<f64> = x.points().map(|p| p[1]).collect();
        assert_eq!(col, vec![0.0, 1.0, 0.0, 2.0]);
        assert_eq!(load_table(f.path(), &schema).unwrap(), x);
    }

    #[test]
    fn ragged_row_names_its_line() {
        let f = write("1,2\n3,4\n5\n");
        match load_table(f.path(), &TableSchema::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_numeric_token_is_rejected() {
        let f = write("1,2\n3,x\n");
        match load_table(f.path(), &TableSchema::default()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("'x'"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file_is_usage_error() {
        let f = write("\n\n");
        let err = load_table(f.path(), &TableSchema::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        assert!(err.is_usage());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_table("/nonexistent/file.csv", &TableSchema::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn write_then_load_is_exact() {
        let spec = GaussMixtureSpec { k: 3, d: 2, r_var: 5.0, n: 50, seed: 8 };
        let (x, c) = gen_gauss_mixture(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let side = write_generated(&path, &spec, &x, &c).unwrap();
        assert_eq!(load_table(&path, &TableSchema::default()).unwrap(), x);
        let meta: GeneratedMeta =
            serde_json::from_reader(File::open(side).unwrap()).unwrap();
        assert_eq!(meta.true_centers, c.to_rows());
        assert_eq!(meta.spec, spec);
    }

    #[test]
    fn subsample_behaviour() {
        let x = Dataset::from_scalars(&(0..100_000).map(f64::from).collect::<Vec<_>>()).unwrap();
        assert_eq!(subsample(&x, 1.0, 3).unwrap(), x);
        let s = subsample(&x, 0.1, 3).unwrap();
        let sd = (100_000.0f64 * 0.1 * 0.9).sqrt();
        assert!((s.len() as f64 - 10_000.0).abs() <= 3.0 * sd, "{}", s.len());
        assert_eq!(subsample(&x, 0.1, 3).unwrap(), s);
        assert_ne!(subsample(&x, 0.1, 4).unwrap(), s);
        // Order preserved.
        assert!(s.coords().windows(2).all(|w| w[0] < w[1]));
        assert!(subsample(&x, 0.0, 1).is_err());
        assert!(subsample(&x, 1.5, 1).is_err());
    }
}
