//! Helpers shared by the FCM and NCM clusterers.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Smallest squared distance fed into a negative power.
pub(crate) const MIN_SQ_DIST: f64 = 1e-12;

/// Flat row-major copy of an `N x d` data matrix after the common checks.
pub(crate) struct Samples {
    pub values: Vec<f64>,
    pub n: usize,
    pub dim: usize,
}

impl Samples {
    pub fn new(data: ArrayView2<'_, f64>, clusters: usize) -> Result<Self> {
        let (n, dim) = data.dim();
        if n == 0 || dim == 0 {
            return Err(Error::EmptyData);
        }
        if n < clusters {
            return Err(Error::TooFewPoints { points: n, clusters });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let values = data.as_standard_layout().iter().copied().collect();
        Ok(Self { values, n, dim })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn all_identical(&self) -> bool {
        let first = self.row(0);
        (1..self.n).all(|i| self.row(i) == first)
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `x.powf(e)` with the exponents used at the default fuzzifier computed exactly.
#[inline]
pub(crate) fn pow(x: f64, e: f64) -> f64 {
    if e == -1.0 {
        1.0 / x
    } else if e == 2.0 {
        x * x
    } else if e == 1.0 {
        x
    } else {
        x.powf(e)
    }
}

/// Picks `clusters` data rows as initial centers: a seeded shuffle of the row
/// indices, preferring rows not yet chosen by value. Falls back to repeated
/// values only when the data has fewer distinct rows than clusters.
pub fn initial_centers(data: ArrayView2<'_, f64>, clusters: usize, seed: u64) -> Result<Array2<f64>> {
    let samples = Samples::new(data, clusters)?;
    let flat = seeded_centers(&samples, clusters, seed);
    Ok(Array2::from_shape_vec((clusters, samples.dim), flat).expect("shape matches"))
}

pub(crate) fn seeded_centers(samples: &Samples, clusters: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..samples.n).collect();
    order.shuffle(&mut rng);

    let mut chosen: Vec<usize> = Vec::with_capacity(clusters);
    for &i in &order {
        if chosen.len() == clusters {
            break;
        }
        if chosen.iter().all(|&j| samples.row(j) != samples.row(i)) {
            chosen.push(i);
        }
    }
    let mut k = 0;
    while chosen.len() < clusters {
        if !chosen.contains(&order[k]) {
            chosen.push(order[k]);
        }
        k += 1;
    }
    chosen.iter().flat_map(|&i| samples.row(i).to_vec()).collect()
}

pub(crate) fn check_centers(centers: ArrayView2<'_, f64>, clusters: usize, dim: usize) -> Result<Vec<f64>> {
    if centers.dim() != (clusters, dim) {
        return Err(Error::DimensionMismatch(format!(
            "initial centers {:?}, expected ({clusters}, {dim})",
            centers.dim()
        )));
    }
    if centers.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(centers.as_standard_layout().iter().copied().collect())
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}
