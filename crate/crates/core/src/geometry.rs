//! Exact Euclidean primitives shared by every algorithm in the crate.
//!
//! Points are stored row-major in one flat `Vec<f64>`; a point is borrowed
//! as a `&[f64]` of length `dim`. Weighted datasets scale each point's
//! contribution to cost and centroids by its weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable point collection with an optional nonnegative weight per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    coords: Vec<f64>,
    dim: usize,
    weights: Option<Vec<f64>>,
}

/// Spread of a dataset: the largest squared pairwise distance and the
/// resulting upper bound on the cost of any single-center clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub max_pairwise_sq_dist: f64,
    pub psi_upper_bound: f64,
}

impl Dataset {
    /// Builds a dataset from row-major coordinates.
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if coords.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: pos / dim });
        }
        Ok(Self {
            coords,
            dim,
            weights: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyDataset)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::new(coords, dim)
    }

    /// One-dimensional convenience constructor.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    /// Attaches per-point weights. All weights must be finite and
    /// nonnegative, with at least one strictly positive.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::invalid(format!(
                "expected {} weights, got {}",
                self.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::Degenerate("all weights are zero".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn total_weight(&self) -> f64 {
        match &self.weights {
            Some(w) => w.iter().sum(),
            None => self.len() as f64,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// Copies out the points at `indices` (and their weights) in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        let mut out = Self::new(coords, self.dim)?;
        if let Some(w) = &self.weights {
            out = out.with_weights(indices.iter().map(|&i| w[i]).collect())?;
        }
        Ok(out)
    }

    /// Exhaustive O(n²) scan for the diameter; intended for small inputs.
    pub fn stats(&self) -> DatasetStats {
        let n = self.len();
        let mut max = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                max = max.max(sq_dist_unchecked(self.point(i), self.point(j)));
            }
        }
        DatasetStats {
            max_pairwise_sq_dist: max,
            psi_upper_bound: (n as f64) * (n as f64) * max,
        }
    }
}

/// Where a center came from: the dataset index it copies (if any) and the
/// sampling round in which it was picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_index: Option<usize>,
    pub round: u32,
}

impl Provenance {
    pub fn point(index: usize, round: u32) -> Self {
        Self {
            source_index: Some(index),
            round,
        }
    }

    pub fn synthetic(round: u32) -> Self {
        Self {
            source_index: None,
            round,
        }
    }
}

/// Ordered set of centers with per-center provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    coords: Vec<f64>,
    dim: usize,
    provenance: Vec<Provenance>,
}

impl CenterSet {
    pub fn new(dim: usize) -> Self {
        Self {
            coords: Vec::new(),
            dim,
            provenance: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyCenters)?;
        let mut out = Self::new(first.as_ref().len());
        for row in rows {
            out.push(row.as_ref(), Provenance::synthetic(0))?;
        }
        Ok(out)
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let rows: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
        Self::from_rows(&rows)
    }

    /// Centers copied from dataset points, all tagged with `round`.
    pub fn from_indices(data: &Dataset, indices: &[usize], round: u32) -> Self {
        let mut out = Self::new(data.dim());
        for &i in indices {
            out.push_index(data, i, round);
        }
        out
    }

    pub fn push(&mut self, center: &[f64], provenance: Provenance) -> Result<()> {
        if center.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: center.len(),
            });
        }
        self.coords.extend_from_slice(center);
        self.provenance.push(provenance);
        Ok(())
    }

    pub fn push_index(&mut self, data: &Dataset, index: usize, round: u32) {
        debug_assert_eq!(data.dim(), self.dim);
        self.coords.extend_from_slice(data.point(index));
        self.provenance.push(Provenance::point(index, round));
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn get_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn set_provenance(&mut self, i: usize, provenance: Provenance) {
        self.provenance[i] = provenance;
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// Centers at positions `start..` (e.g. the ones added by the latest round).
    pub(crate) fn tail(&self, start: usize) -> &[f64] {
        &self.coords[start * self.dim..]
    }

    /// Concatenation `self ∪ other`, preserving order.
    pub fn union(&self, other: &CenterSet) -> Result<CenterSet> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut out = self.clone();
        out.coords.extend_from_slice(&other.coords);
        out.provenance.extend_from_slice(&other.provenance);
        Ok(out)
    }

    pub(crate) fn check_against(&self, data: &Dataset) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyCenters);
        }
        if self.dim != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                got: self.dim,
            });
        }
        Ok(())
    }
}

/// Nearest-center labels and squared distances for every point.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub owner: Vec<usize>,
    pub sq_dist: Vec<f64>,
}

impl Assignment {
    /// Weighted cost implied by the stored distances.
    pub fn cost(&self, data: &Dataset) -> f64 {
        self.sq_dist
            .iter()
            .enumerate()
            .map(|(i, d)| data.weight(i) * d)
            .sum()
    }
}

#[inline]
pub(crate) fn sq_dist_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Nearest center among row-major `centers`, lowest index on ties.
#[inline]
pub(crate) fn nearest_in(x: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist_unchecked(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Squared Euclidean distance.
pub fn sq_dist(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(sq_dist_unchecked(a, b))
}

/// Index of the closest center (lowest index on ties) and its squared distance.
pub fn nearest(x: &[f64], centers: &CenterSet) -> Result<(usize, f64)> {
    if centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    if x.len() != centers.dim() {
        return Err(Error::DimensionMismatch {
            expected: centers.dim(),
            got: x.len(),
        });
    }
    Ok(nearest_in(x, centers.coords(), centers.dim()))
}

pub fn assign(data: &Dataset, centers: &CenterSet) -> Result<Assignment> {
    centers.check_against(data)?;
    let (owner, sq_dist) = data
        .points()
        .map(|x| nearest_in(x, centers.coords(), data.dim()))
        .unzip();
    Ok(Assignment { owner, sq_dist })
}

/// Weighted k-means cost `Σ w_x · d²(x, C)`, summed in index order.
pub fn cost(data: &Dataset, centers: &CenterSet) -> Result<f64> {
    centers.check_against(data)?;
    Ok(data
        .points()
        .enumerate()
        .map(|(i, x)| data.weight(i) * nearest_in(x, centers.coords(), data.dim()).1)
        .sum())
}

/// Weighted mean of the points at `members`.
pub fn centroid(data: &Dataset, members: &[usize]) -> Result<Vec<f64>> {
    weighted_mean(
        data.dim(),
        members.iter().map(|&i| (data.point(i), data.weight(i))),
    )
}

/// Weighted mean of arbitrary `(point, weight)` pairs.
pub fn weighted_mean<'a, I>(dim: usize, items: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    let mut sum = vec![0.0; dim];
    let mut mass = 0.0;
    for (p, w) in items {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(p) {
            *s += w * v;
        }
        mass += w;
    }
    if mass <= 0.0 {
        return Err(Error::Degenerate("total weight is zero".into()));
    }
    sum.iter_mut().for_each(|s| *s /= mass);
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sq_dist_examples() {
        assert_eq!(sq_dist(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        assert_eq!(sq_dist(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert_eq!(sq_dist(&[1.0, 2.0, 3.0], &[4.0, 6.0, 3.0]).unwrap(), 25.0);
        assert!(matches!(
            sq_dist(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn nearest_examples() {
        let c = CenterSet::from_scalars(&[-1.0, 2.0]).unwrap();
        assert_eq!(nearest(&[0.0], &c).unwrap(), (0, 1.0));
        let c = CenterSet::from_scalars(&[1.0, -1.0]).unwrap();
        assert_eq!(nearest(&[0.0], &c).unwrap(), (0, 1.0));
        let c = CenterSet::from_scalars(&[5.0]).unwrap();
        assert_eq!(nearest(&[5.0], &c).unwrap(), (0, 0.0));
        assert!(matches!(
            nearest(&[0.0], &CenterSet::new(1)),
            Err(Error::EmptyCenters)
        ));
    }

    #[test]
    fn cost_examples() {
        let x = Dataset::from_scalars(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let c = CenterSet::from_scalars(&[0.0, 3.0]).unwrap();
        assert_eq!(cost(&x, &c).unwrap(), 2.0);

        let all = CenterSet::from_scalars(&[3.0, 2.0, 1.0, 0.0]).unwrap();
        assert_eq!(cost(&x, &all).unwrap(), 0.0);

        let doubled = x.clone().with_weights(vec![2.0; 4]).unwrap();
        assert_eq!(cost(&doubled, &c).unwrap(), 4.0);

        let c2 = CenterSet::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(matches!(
            cost(&x, &c2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn centroid_examples() {
        let x = Dataset::from_scalars(&[0.0, 2.0]).unwrap();
        assert_eq!(centroid(&x, &[0, 1]).unwrap(), vec![1.0]);
        let w = Dataset::from_scalars(&[0.0, 3.0])
            .unwrap()
            .with_weights(vec![1.0, 2.0])
            .unwrap();
        assert_eq!(centroid(&w, &[0, 1]).unwrap(), vec![2.0]);
        assert_eq!(centroid(&x, &[1]).unwrap(), vec![2.0]);
        let z = Dataset::from_scalars(&[0.0, 3.0])
            .unwrap()
            .with_weights(vec![0.0, 1.0])
            .unwrap();
        assert!(matches!(centroid(&z, &[0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn dataset_validation() {
        assert!(matches!(Dataset::new(vec![], 2), Err(Error::EmptyDataset)));
        assert!(Dataset::new(vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(matches!(
            Dataset::new(vec![1.0, f64::NAN], 1),
            Err(Error::NonFinite { index: 1 })
        ));
        let x = Dataset::from_scalars(&[1.0, 2.0]).unwrap();
        assert!(x.clone().with_weights(vec![0.0, 0.0]).is_err());
        assert!(x.clone().with_weights(vec![-1.0, 1.0]).is_err());
        assert!(x.with_weights(vec![1.0]).is_err());
    }

    #[test]
    fn stats_bound() {
        let x = Dataset::from_scalars(&[0.0, 1.0, 5.0]).unwrap();
        let s = x.stats();
        assert_eq!(s.max_pairwise_sq_dist, 25.0);
        assert_eq!(s.psi_upper_bound, 9.0 * 25.0);
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize, d: usize) -> (Dataset, CenterSet) {
        let pts: Vec<f64> = (0..n * d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let cs: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        (Dataset::new(pts, d).unwrap(), CenterSet::from_rows(&cs).unwrap())
    }

    #[test]
    fn assignment_cost_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (x, c) = random_instance(&mut rng, 40, 5, 3);
            let via_assignment = assign(&x, &c).unwrap().cost(&x);
            let mut direct = 0.0;
            for p in x.points() {
                let mut best = f64::INFINITY;
                for q in c.iter() {
                    let mut s = 0.0;
                    for j in 0..p.len() {
                        s += (p[j] - q[j]) * (p[j] - q[j]);
                    }
                    best = best.min(s);
                }
                direct += best;
            }
            assert!((via_assignment - direct).abs() <= 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn centroid_minimizes_weighted_sse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (x, _) = random_instance(&mut rng, 25, 1, 4);
        let w: Vec<f64> = (0..25).map(|_| rng.random_range(0.1..3.0)).collect();
        let x = x.with_weights(w).unwrap();
        let members: Vec<usize> = (0..25).collect();
        let c = centroid(&x, &members).unwrap();
        let sse = |p: &[f64]| -> f64 {
            (0..25)
                .map(|i| x.weight(i) * sq_dist_unchecked(x.point(i), p))
                .sum()
        };
        let best = sse(&c);
        for _ in 0..200 {
            let p: Vec<f64> = c.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
            assert!(sse(&p) >= best);
        }
    }

    proptest! {
        #[test]
        fn adding_centers_never_increases_cost(
            pts in prop::collection::vec(-100.0f64..100.0, 2..60),
            base in prop::collection::vec(-100.0f64..100.0, 1..5),
            extra in prop::collection::vec(-100.0f64..100.0, 1..5),
        ) {
            let x = Dataset::from_scalars(&pts).unwrap();
            let c = CenterSet::from_scalars(&base).unwrap();
            let more = c.union(&CenterSet::from_scalars(&extra).unwrap()).unwrap();
            prop_assert!(cost(&x, &more).unwrap() <= cost(&x, &c).unwrap());
        }

        #[test]
        fn sq_dist_symmetric_and_zero_iff_equal(
            a in prop::collection::vec(-1e3f64..1e3, 3),
            b in prop::collection::vec(-1e3f64..1e3, 3),
        ) {
            let ab = sq_dist(&a, &b).unwrap();
            prop_assert_eq!(ab, sq_dist(&b, &a).unwrap());
            prop_assert_eq!(ab == 0.0, a == b);
        }
    }
}
