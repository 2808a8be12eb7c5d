//! Neutrosophic c-means.
//!
//! Every point gets determinate memberships `T_ij` to the `c` clusters, an
//! ambiguity membership `I_i` and an outlier membership `F_i`. With
//! `a = -1/(m-1)` and `D(x, y) = max(|x - y|^2, 1e-12)`:
//!
//! ```text
//! T_ij = K/w1 * D(x_i, C_j)^a
//! I_i  = K/w2 * D(x_i, Cbar_i)^a      Cbar_i = (C_p + C_q) / 2
//! F_i  = K/w3 * (delta^2)^a
//! K    = 1 / (sum_j D(x_i, C_j)^a / w1 + D(x_i, Cbar_i)^a / w2 + (delta^2)^a / w3)
//! C_j  = sum_i (w1 T_ij)^m x_i / sum_i (w1 T_ij)^m
//! ```
//!
//! where `p` and `q` index the largest and second largest `T_ij` of the
//! previous iterate. `K` makes `sum_j T_ij + I_i + F_i = 1` hold exactly.
//! The cost tracked per iteration is
//! `sum_ij (w1 T_ij)^m |x_i - C_j|^2 + sum_i (w2 I_i)^m |x_i - Cbar_i|^2 + sum_i delta^2 (w3 F_i)^m`.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::cluster::{argmax, check_centers, max_abs_diff, pow, seeded_centers, sq_dist, Samples, MIN_SQ_DIST};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NcmParams {
    pub clusters: usize,
    pub fuzziness: f64,
    /// Weights of the determinate, ambiguity and outlier terms.
    pub weights: [f64; 3],
    /// Outlier regularizer; larger values make outlier membership costlier.
    pub delta: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NcmParams {
    fn default() -> Self {
        Self {
            clusters: 3,
            fuzziness: 2.0,
            weights: [0.75, 0.125, 0.125],
            delta: 0.1,
            epsilon: 1e-5,
            max_iter: 100,
            seed: 0,
        }
    }
}

impl NcmParams {
    /// Checks ranges and rescales the weights to sum to one.
    pub fn validated(mut self) -> Result<Self> {
        if self.clusters < 2 {
            return Err(Error::InvalidParameter(format!(
                "ncm needs at least 2 clusters, got {}",
                self.clusters
            )));
        }
        if self.clusters + 2 > u8::MAX as usize {
            return Err(Error::InvalidParameter("too many clusters".into()));
        }
        if !(self.fuzziness > 1.0 && self.fuzziness.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fuzziness must exceed 1, got {}",
                self.fuzziness
            )));
        }
        if self.weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "weights must be positive, got {:?}",
                self.weights
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive, got {}",
                self.delta
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
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            for w in &mut self.weights {
                *w /= total;
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcmState {
    /// `c x d`
    pub centers: Array2<f64>,
    /// `N x c` determinate memberships.
    pub t: Array2<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub objective_history: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Set when every data point is identical and no partition exists.
    pub degenerate: bool,
}

impl NcmState {
    pub fn clusters(&self) -> usize {
        self.centers.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NcmAssignment {
    pub clusters: usize,
    /// `0..c` determinate, `c` ambiguity, `c + 1` outlier.
    pub labels: Vec<usize>,
}

impl NcmAssignment {
    pub fn ambiguity_label(&self) -> usize {
        self.clusters
    }

    pub fn outlier_label(&self) -> usize {
        self.clusters + 1
    }
}

#[derive(Debug)]
pub struct NcmIterate<'a> {
    pub iteration: usize,
    pub centers: ArrayView2<'a, f64>,
    pub t: ArrayView2<'a, f64>,
    pub i: &'a [f64],
    pub f: &'a [f64],
    pub objective: f64,
    pub max_change: f64,
}

/// Indices of the largest and second largest entries; lowest index on ties.
pub fn top_two(t_row: &[f64]) -> (usize, usize) {
    let p = argmax(t_row);
    let mut q = if p == 0 { 1 } else { 0 };
    for (j, &v) in t_row.iter().enumerate() {
        if j != p && v > t_row[q] {
            q = j;
        }
    }
    (p, q)
}

/// Midpoint of the centers with the two largest memberships in `t_row`.
pub fn compute_cimax(t_row: &[f64], centers: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if t_row.len() < 2 || t_row.len() != centers.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} memberships for {} centers (need >= 2)",
            t_row.len(),
            centers.nrows()
        )));
    }
    let (p, q) = top_two(t_row);
    Ok(centers
        .row(p)
        .iter()
        .zip(centers.row(q).iter())
        .map(|(a, b)| (a + b) / 2.0)
        .collect())
}

fn midpoint(centers: &[f64], dim: usize, p: usize, q: usize, out: &mut [f64]) {
    for a in 0..dim {
        out[a] = (centers[p * dim + a] + centers[q * dim + a]) / 2.0;
    }
}

struct Memberships {
    t: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
}

struct Solver<'a> {
    samples: &'a Samples,
    c: usize,
    m: f64,
    w: [f64; 3],
    delta_sq: f64,
    exponent: f64,
}

impl Solver<'_> {
    /// Membership pass. `ranking` supplies the previous T used to choose the
    /// two centers averaged into the ambiguity reference; without it the
    /// nearest and second nearest centers are used.
    fn memberships(&self, centers: &[f64], ranking: Option<&[f64]>) -> Memberships {
        let (n, c, d) = (self.samples.n, self.c, self.samples.dim);
        let mut t = vec![0.0; n * c];
        let mut i_vec = vec![0.0; n];
        let mut f_vec = vec![0.0; n];
        let mut terms = vec![0.0; c];
        let mut neg_d2 = vec![0.0; c];
        let mut cbar = vec![0.0; d];
        let outlier_term = pow(self.delta_sq.max(MIN_SQ_DIST), self.exponent) / self.w[2];

        for i in 0..n {
            let x = self.samples.row(i);
            for j in 0..c {
                let d2 = sq_dist(x, &centers[j * d..(j + 1) * d]);
                neg_d2[j] = -d2;
                terms[j] = pow(d2.max(MIN_SQ_DIST), self.exponent) / self.w[0];
            }
            let (p, q) = match ranking {
                Some(prev) => top_two(&prev[i * c..(i + 1) * c]),
                None => top_two(&neg_d2),
            };
            midpoint(centers, d, p, q, &mut cbar);
            let ambiguity_term = pow(sq_dist(x, &cbar).max(MIN_SQ_DIST), self.exponent) / self.w[1];

            let k = 1.0 / (terms.iter().sum::<f64>() + ambiguity_term + outlier_term);
            for j in 0..c {
                t[i * c + j] = k * terms[j];
            }
            i_vec[i] = k * ambiguity_term;
            f_vec[i] = k * outlier_term;
        }
        Memberships { t, i: i_vec, f: f_vec }
    }

    fn centers(&self, t: &[f64], previous: &[f64]) -> Vec<f64> {
        let (c, d) = (self.c, self.samples.dim);
        let mut num = vec![0.0; c * d];
        let mut den = vec![0.0; c];
        for i in 0..self.samples.n {
            let x = self.samples.row(i);
            for j in 0..c {
                let w = pow(self.w[0] * t[i * c + j], self.m);
                den[j] += w;
                for a in 0..d {
                    num[j * d + a] += w * x[a];
                }
            }
        }
        let mut out = previous.to_vec();
        for j in 0..c {
            if den[j] > 0.0 {
                for a in 0..d {
                    out[j * d + a] = num[j * d + a] / den[j];
                }
            }
        }
        out
    }

    fn objective(&self, centers: &[f64], mb: &Memberships) -> f64 {
        let (c, d, m) = (self.c, self.samples.dim, self.m);
        let mut cbar = vec![0.0; d];
        let mut determinate = 0.0;
        let mut ambiguity = 0.0;
        let mut outlier = 0.0;
        for i in 0..self.samples.n {
            let x = self.samples.row(i);
            let row = &mb.t[i * c..(i + 1) * c];
            for j in 0..c {
                determinate += pow(self.w[0] * row[j], m) * sq_dist(x, &centers[j * d..(j + 1) * d]);
            }
            let (p, q) = top_two(row);
            midpoint(centers, d, p, q, &mut cbar);
            ambiguity += pow(self.w[1] * mb.i[i], m) * sq_dist(x, &cbar);
            outlier += self.delta_sq * pow(self.w[2] * mb.f[i], m);
        }
        determinate + ambiguity + outlier
    }
}

pub fn ncm_fit(data: ArrayView2<'_, f64>, params: &NcmParams) -> Result<NcmState> {
    let params = params.clone().validated()?;
    let samples = Samples::new(data, params.clusters)?;
    if samples.all_identical() {
        return Ok(degenerate_state(&samples, params.clusters));
    }
    let init = seeded_centers(&samples, params.clusters, params.seed);
    run(&samples, &params, init, |_| {})
}

pub fn ncm_fit_from(
    data: ArrayView2<'_, f64>,
    params: &NcmParams,
    initial_centers: ArrayView2<'_, f64>,
) -> Result<NcmState> {
    ncm_fit_observed(data, params, initial_centers, |_| {})
}

/// Fit from explicit `c x d` initial centers, calling `observer` after each
/// iteration.
pub fn ncm_fit_observed(
    data: ArrayView2<'_, f64>,
    params: &NcmParams,
    initial_centers: ArrayView2<'_, f64>,
    observer: impl FnMut(&NcmIterate<'_>),
) -> Result<NcmState> {
    let params = params.clone().validated()?;
    let samples = Samples::new(data, params.clusters)?;
    let init = check_centers(initial_centers, params.clusters, samples.dim)?;
    if samples.all_identical() {
        return Ok(degenerate_state(&samples, params.clusters));
    }
    run(&samples, &params, init, observer)
}

fn degenerate_state(samples: &Samples, c: usize) -> NcmState {
    let d = samples.dim;
    let row = samples.row(0).to_vec();
    NcmState {
        centers: Array2::from_shape_fn((c, d), |(_, a)| row[a]),
        t: Array2::from_elem((samples.n, c), 1.0 / c as f64),
        i: vec![0.0; samples.n],
        f: vec![0.0; samples.n],
        objective_history: Vec::new(),
        iterations_run: 0,
        converged: false,
        degenerate: true,
    }
}

fn run(
    samples: &Samples,
    params: &NcmParams,
    mut centers: Vec<f64>,
    mut observer: impl FnMut(&NcmIterate<'_>),
) -> Result<NcmState> {
    let c = params.clusters;
    let solver = Solver {
        samples,
        c,
        m: params.fuzziness,
        w: params.weights,
        delta_sq: params.delta * params.delta,
        exponent: -1.0 / (params.fuzziness - 1.0),
    };

    // the first pass ranks clusters by distance to the initial centers
    let mut current: Option<Memberships> = None;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        let next = solver.memberships(&centers, current.as_ref().map(|m| m.t.as_slice()));
        centers = solver.centers(&next.t, &centers);
        let objective = solver.objective(&centers, &next);
        history.push(objective);
        let change = current
            .as_ref()
            .map_or(f64::INFINITY, |prev| max_abs_diff(&prev.t, &next.t));

        observer(&NcmIterate {
            iteration: iterations,
            centers: ArrayView2::from_shape((c, samples.dim), &centers).expect("shape"),
            t: ArrayView2::from_shape((samples.n, c), &next.t).expect("shape"),
            i: &next.i,
            f: &next.f,
            objective,
            max_change: change,
        });

        current = Some(next);
        if change < params.epsilon {
            converged = true;
            break;
        }
    }
    let current = current.expect("max_iter >= 1");

    Ok(NcmState {
        centers: Array2::from_shape_vec((c, samples.dim), centers).expect("shape"),
        t: Array2::from_shape_vec((samples.n, c), current.t).expect("shape"),
        i: current.i,
        f: current.f,
        objective_history: history,
        iterations_run: iterations,
        converged,
        degenerate: false,
    })
}

/// Evaluates the NCM cost of `state` on `data`.
pub fn ncm_objective(data: ArrayView2<'_, f64>, state: &NcmState, params: &NcmParams) -> Result<f64> {
    let params = params.clone().validated()?;
    let c = state.clusters();
    let (n, _) = data.dim();
    if state.t.dim() != (n, c) || state.i.len() != n || state.f.len() != n {
        return Err(Error::DimensionMismatch("state does not match data".into()));
    }
    let samples = Samples::new(data, 1)?;
    let centers = check_centers(state.centers.view(), c, samples.dim)?;
    let mb = Memberships {
        t: state.t.as_standard_layout().iter().copied().collect(),
        i: state.i.clone(),
        f: state.f.clone(),
    };
    if mb.t.iter().chain(&mb.i).chain(&mb.f).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let solver = Solver {
        samples: &samples,
        c,
        m: params.fuzziness,
        w: params.weights,
        delta_sq: params.delta * params.delta,
        exponent: -1.0 / (params.fuzziness - 1.0),
    };
    Ok(solver.objective(&centers, &mb))
}

/// Label each point with the largest of its `c + 2` memberships. Ties go to
/// the earliest in the order `T_1..T_c, I, F`.
pub fn ncm_assign(state: &NcmState) -> NcmAssignment {
    let c = state.clusters();
    let mut scores = vec![0.0; c + 2];
    let labels = state
        .t
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            for (s, &v) in scores.iter_mut().zip(row.iter()) {
                *s = v;
            }
            scores[c] = state.i[i];
            scores[c + 1] = state.f[i];
            argmax(&scores)
        })
        .collect();
    NcmAssignment { clusters: c, labels }
}
