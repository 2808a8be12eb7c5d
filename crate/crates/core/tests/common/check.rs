//! Iterate-by-iterate comparison of the library fits against the oracles.

use super::{fcm_oracle, ncm_oracle, NcmOracleParams};
use ncm_lumen::fcm::{fcm_fit_observed, FcmParams};
use ncm_lumen::ncm::{ncm_fit_observed, NcmParams};
use ndarray::Array2;

pub const TOL: f64 = 1e-9;
pub const ITERS: usize = 10;

pub fn column(x: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((x.len(), 1), x.to_vec()).unwrap()
}

pub fn close(a: f64, b: f64, what: &str) {
    assert!((a - b).abs() <= TOL * (1.0 + b.abs()), "{what}: {a} vs {b}");
}

/// Runs the library FCM for up to ten iterations and checks every iterate
/// against the oracle. Past library convergence the oracle must stay put.
pub fn check_fcm(x: &[f64], init: &[f64], m: f64) -> usize {
    let c = init.len();
    let params = FcmParams {
        clusters: c,
        fuzziness: m,
        epsilon: 1e-15,
        max_iter: ITERS,
        seed: 0,
    };
    let mut seen: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    fcm_fit_observed(column(x).view(), &params, column(init).view(), |it| {
        seen.push((
            it.centers.iter().copied().collect(),
            it.memberships.iter().copied().collect(),
            it.objective,
        ))
    })
    .unwrap();
    let oracle = fcm_oracle(x, init, m, ITERS);
    for (k, step) in oracle.iter().enumerate() {
        let (centers, u, objective) = &seen[k.min(seen.len() - 1)];
        for j in 0..c {
            close(centers[j], step.centers[j], &format!("iter {k} center {j}"));
        }
        for i in 0..x.len() {
            for j in 0..c {
                close(u[i * c + j], step.u[i][j], &format!("iter {k} u[{i}][{j}]"));
            }
        }
        if k < seen.len() {
            close(*objective, step.objective, &format!("iter {k} objective"));
        }
    }
    seen.len()
}

pub fn ncm_params(c: usize, delta: f64) -> NcmParams {
    NcmParams {
        clusters: c,
        fuzziness: 2.0,
        weights: [0.75, 0.125, 0.125],
        delta,
        epsilon: 1e-15,
        max_iter: ITERS,
        seed: 0,
    }
}

pub fn check_ncm(x: &[f64], init: &[f64], params: &NcmParams) -> usize {
    let c = init.len();
    #[allow(clippy::type_complexity)]
    let mut seen: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64)> = Vec::new();
    ncm_fit_observed(column(x).view(), params, column(init).view(), |it| {
        seen.push((
            it.centers.iter().copied().collect(),
            it.t.iter().copied().collect(),
            it.i.to_vec(),
            it.f.to_vec(),
            it.objective,
        ))
    })
    .unwrap();
    let op = NcmOracleParams {
        m: params.fuzziness,
        w1: params.weights[0],
        w2: params.weights[1],
        w3: params.weights[2],
        delta: params.delta,
    };
    let oracle = ncm_oracle(x, init, &op, ITERS);
    for (k, step) in oracle.iter().enumerate() {
        let (centers, t, iv, fv, objective) = &seen[k.min(seen.len() - 1)];
        for j in 0..c {
            close(centers[j], step.centers[j], &format!("iter {k} center {j}"));
        }
        for i in 0..x.len() {
            for j in 0..c {
                close(t[i * c + j], step.t[i][j], &format!("iter {k} T[{i}][{j}]"));
            }
            close(iv[i], step.i[i], &format!("iter {k} I[{i}]"));
            close(fv[i], step.f[i], &format!("iter {k} F[{i}]"));
        }
        if k < seen.len() {
            close(*objective, step.objective, &format!("iter {k} objective"));
        }
    }
    seen.len()
}
