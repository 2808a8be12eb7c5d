//! Fuzzy c-means, the baseline clusterer.
//!
//! Alternates the membership update
//! `u_ik = 1 / sum_j (|x_i - v_k| / |x_i - v_j|)^(2/(m-1))`
//! with the weighted-mean center update `v_k = sum_i u_ik^m x_i / sum_i u_ik^m`,
//! and records the cost `sum_i sum_k u_ik^m |x_i - v_k|^2` after each pass.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::cluster::{argmax, check_centers, max_abs_diff, pow, seeded_centers, sq_dist, Samples};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FcmParams {
    pub clusters: usize,
    pub fuzziness: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FcmParams {
    fn default() -> Self {
        Self {
            clusters: 3,
            fuzziness: 2.0,
            epsilon: 1e-5,
            max_iter: 100,
            seed: 0,
        }
    }
}

impl FcmParams {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 {
            return Err(Error::InvalidParameter("clusters must be >= 1".into()));
        }
        if !(self.fuzziness > 1.0 && self.fuzziness.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fuzziness must exceed 1, got {}",
                self.fuzziness
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmState {
    /// `c x d`
    pub centers: Array2<f64>,
    /// `N x c`; rows sum to one.
    pub memberships: Array2<f64>,
    pub objective_history: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

/// Snapshot handed to an observer after every iteration.
#[derive(Debug)]
pub struct FcmIterate<'a> {
    pub iteration: usize,
    pub centers: ArrayView2<'a, f64>,
    pub memberships: ArrayView2<'a, f64>,
    pub objective: f64,
    pub max_change: f64,
}

pub fn fcm_fit(data: ArrayView2<'_, f64>, params: &FcmParams) -> Result<FcmState> {
    params.validate()?;
    let samples = Samples::new(data, params.clusters)?;
    let init = seeded_centers(&samples, params.clusters, params.seed);
    run(&samples, params, init, |_| {})
}

/// Fit from caller-supplied `c x d` initial centers.
pub fn fcm_fit_from(
    data: ArrayView2<'_, f64>,
    params: &FcmParams,
    initial_centers: ArrayView2<'_, f64>,
) -> Result<FcmState> {
    fcm_fit_observed(data, params, initial_centers, |_| {})
}

pub fn fcm_fit_observed(
    data: ArrayView2<'_, f64>,
    params: &FcmParams,
    initial_centers: ArrayView2<'_, f64>,
    observer: impl FnMut(&FcmIterate<'_>),
) -> Result<FcmState> {
    params.validate()?;
    let samples = Samples::new(data, params.clusters)?;
    let init = check_centers(initial_centers, params.clusters, samples.dim)?;
    run(&samples, params, init, observer)
}

fn run(
    samples: &Samples,
    params: &FcmParams,
    mut centers: Vec<f64>,
    mut observer: impl FnMut(&FcmIterate<'_>),
) -> Result<FcmState> {
    let c = params.clusters;
    let m = params.fuzziness;
    let mut previous: Option<Vec<f64>> = None;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        let u = memberships(samples, &centers, c, m);
        centers = update_centers(samples, &u, &centers, c, m);
        let objective = objective(samples, &u, &centers, c, m);
        history.push(objective);
        let change = previous.as_deref().map_or(f64::INFINITY, |p| max_abs_diff(p, &u));

        observer(&FcmIterate {
            iteration: iterations,
            centers: ArrayView2::from_shape((c, samples.dim), &centers).expect("shape"),
            memberships: ArrayView2::from_shape((samples.n, c), &u).expect("shape"),
            objective,
            max_change: change,
        });

        previous = Some(u);
        if change < params.epsilon {
            converged = true;
            break;
        }
    }

    Ok(FcmState {
        centers: Array2::from_shape_vec((c, samples.dim), centers).expect("shape"),
        memberships: Array2::from_shape_vec((samples.n, c), previous.unwrap_or_default()).expect("shape"),
        objective_history: history,
        iterations_run: iterations,
        converged,
    })
}

fn memberships(samples: &Samples, centers: &[f64], c: usize, m: f64) -> Vec<f64> {
    let d = samples.dim;
    let exponent = -1.0 / (m - 1.0);
    let mut u = vec![0.0; samples.n * c];
    let mut terms = vec![0.0; c];
    for i in 0..samples.n {
        let x = samples.row(i);
        let row = &mut u[i * c..(i + 1) * c];
        let mut singular = None;
        for k in 0..c {
            let d2 = sq_dist(x, &centers[k * d..(k + 1) * d]);
            if d2 == 0.0 {
                singular = Some(k);
                break;
            }
            terms[k] = pow(d2, exponent);
        }
        match singular {
            // limit of the update as the point reaches a center
            Some(k) => row[k] = 1.0,
            None => {
                let total: f64 = terms.iter().sum();
                for k in 0..c {
                    row[k] = terms[k] / total;
                }
            }
        }
    }
    u
}

fn update_centers(samples: &Samples, u: &[f64], previous: &[f64], c: usize, m: f64) -> Vec<f64> {
    let d = samples.dim;
    let mut num = vec![0.0; c * d];
    let mut den = vec![0.0; c];
    for i in 0..samples.n {
        let x = samples.row(i);
        for k in 0..c {
            let w = pow(u[i * c + k], m);
            den[k] += w;
            for a in 0..d {
                num[k * d + a] += w * x[a];
            }
        }
    }
    let mut out = previous.to_vec();
    for k in 0..c {
        // a cluster nobody belongs to keeps its center
        if den[k] > 0.0 {
            for a in 0..d {
                out[k * d + a] = num[k * d + a] / den[k];
            }
        }
    }
    out
}

fn objective(samples: &Samples, u: &[f64], centers: &[f64], c: usize, m: f64) -> f64 {
    let d = samples.dim;
    let mut total = 0.0;
    for i in 0..samples.n {
        let x = samples.row(i);
        for k in 0..c {
            total += pow(u[i * c + k], m) * sq_dist(x, &centers[k * d..(k + 1) * d]);
        }
    }
    total
}

/// FCM cost for arbitrary memberships and centers.
pub fn fcm_objective(
    data: ArrayView2<'_, f64>,
    memberships: ArrayView2<'_, f64>,
    centers: ArrayView2<'_, f64>,
    fuzziness: f64,
) -> Result<f64> {
    let c = centers.nrows();
    let samples = Samples::new(data, c.min(data.nrows()))?;
    if memberships.dim() != (samples.n, c) {
        return Err(Error::DimensionMismatch("memberships do not match data/centers".into()));
    }
    let centers = check_centers(centers, c, samples.dim)?;
    let u: Vec<f64> = memberships.as_standard_layout().iter().copied().collect();
    Ok(objective(&samples, &u, &centers, c, fuzziness))
}

/// Hard assignment by largest membership, lowest cluster index on ties.
pub fn fcm_assign(state: &FcmState) -> Vec<usize> {
    state
        .memberships
        .rows()
        .into_iter()
        .map(|row| argmax(row.as_slice().expect("standard layout")))
        .collect()
}
