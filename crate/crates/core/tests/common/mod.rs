//! Straight-line reference implementations used as test oracles. They work
//! on 1-D data, use plain loops and share no code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod check;

#[derive(Debug, Clone)]
pub struct FcmStep {
    pub centers: Vec<f64>,
    /// `u[i][k]`: membership of point i in cluster k.
    pub u: Vec<Vec<f64>>,
    pub objective: f64,
}

/// `iters` FCM iterations: memberships from the current centers, then new
/// centers, then the cost with the new centers.
pub fn fcm_oracle(x: &[f64], init: &[f64], m: f64, iters: usize) -> Vec<FcmStep> {
    let c = init.len();
    let mut v = init.to_vec();
    let mut steps = Vec::new();
    for _ in 0..iters {
        let mut u = vec![vec![0.0; c]; x.len()];
        for i in 0..x.len() {
            let zero = (0..c).find(|&k| x[i] == v[k]);
            if let Some(k) = zero {
                u[i][k] = 1.0;
                continue;
            }
            for k in 0..c {
                let dik = (x[i] - v[k]).abs();
                let mut s = 0.0;
                for l in 0..c {
                    let dil = (x[i] - v[l]).abs();
                    s += (dik / dil).powf(2.0 / (m - 1.0));
                }
                u[i][k] = 1.0 / s;
            }
        }
        for k in 0..c {
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..x.len() {
                num += u[i][k].powf(m) * x[i];
                den += u[i][k].powf(m);
            }
            if den > 0.0 {
                v[k] = num / den;
            }
        }
        let mut j = 0.0;
        for i in 0..x.len() {
            for k in 0..c {
                j += u[i][k].powf(m) * (x[i] - v[k]).powi(2);
            }
        }
        steps.push(FcmStep {
            centers: v.clone(),
            u,
            objective: j,
        });
    }
    steps
}

#[derive(Debug, Clone)]
pub struct NcmStep {
    pub centers: Vec<f64>,
    pub t: Vec<Vec<f64>>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub objective: f64,
}

/// Indices of the largest and second largest values, lowest index on ties.
fn best_two(values: &[f64]) -> (usize, usize) {
    let mut p = 0;
    for j in 1..values.len() {
        if values[j] > values[p] {
            p = j;
        }
    }
    let mut q = usize::MAX;
    for j in 0..values.len() {
        if j == p {
            continue;
        }
        if q == usize::MAX || values[j] > values[q] {
            q = j;
        }
    }
    (p, q)
}

pub struct NcmOracleParams {
    pub m: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub delta: f64,
}

/// `iters` NCM iterations. The first ranks clusters by closeness to the
/// initial centers; later ones by the previous iteration's T.
pub fn ncm_oracle(x: &[f64], init: &[f64], p: &NcmOracleParams, iters: usize) -> Vec<NcmStep> {
    let c = init.len();
    let n = x.len();
    let e = -2.0 / (p.m - 1.0);
    // distances below 1e-6 (squared 1e-12) are raised to it
    let dist = |a: f64, b: f64| ((a - b) * (a - b)).max(1e-12).sqrt();
    let mut v = init.to_vec();
    let mut prev_t: Option<Vec<Vec<f64>>> = None;
    let mut steps = Vec::new();
    for _ in 0..iters {
        let mut t = vec![vec![0.0; c]; n];
        let mut iv = vec![0.0; n];
        let mut fv = vec![0.0; n];
        for i in 0..n {
            let rank: Vec<f64> = match &prev_t {
                Some(pt) => pt[i].clone(),
                None => (0..c).map(|j| -(x[i] - v[j]).abs()).collect(),
            };
            let (pi, qi) = best_two(&rank);
            let cbar = (v[pi] + v[qi]) / 2.0;
            let mut denom = 0.0;
            for j in 0..c {
                denom += dist(x[i], v[j]).powf(e) / p.w1;
            }
            denom += dist(x[i], cbar).powf(e) / p.w2;
            denom += p.delta.powf(e) / p.w3;
            let k = 1.0 / denom;
            for j in 0..c {
                t[i][j] = k / p.w1 * dist(x[i], v[j]).powf(e);
            }
            iv[i] = k / p.w2 * dist(x[i], cbar).powf(e);
            fv[i] = k / p.w3 * p.delta.powf(e);
        }
        for j in 0..c {
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                let wt = (p.w1 * t[i][j]).powf(p.m);
                num += wt * x[i];
                den += wt;
            }
            if den > 0.0 {
                v[j] = num / den;
            }
        }
        let mut obj = 0.0;
        for i in 0..n {
            for j in 0..c {
                obj += (p.w1 * t[i][j]).powf(p.m) * (x[i] - v[j]).powi(2);
            }
            let (pi, qi) = best_two(&t[i]);
            let cbar = (v[pi] + v[qi]) / 2.0;
            obj += (p.w2 * iv[i]).powf(p.m) * (x[i] - cbar).powi(2);
            obj += p.delta * p.delta * (p.w3 * fv[i]).powf(p.m);
        }
        steps.push(NcmStep {
            centers: v.clone(),
            t: t.clone(),
            i: iv,
            f: fv,
            objective: obj,
        });
        prev_t = Some(t);
    }
    steps
}

/// Largest over all pairs of the smallest distance, both directions.
pub fn hausdorff_brute(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let directed = |from: &[(f64, f64)], to: &[(f64, f64)]| {
        let mut worst: f64 = 0.0;
        for p in from {
            let mut best = f64::INFINITY;
            for q in to {
                best = best.min(((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt());
            }
            worst = worst.max(best);
        }
        worst
    };
    directed(a, b).max(directed(b, a))
}

pub fn ad_curve_brute(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let directed = |from: &[(f64, f64)], to: &[(f64, f64)]| {
        let mut sum = 0.0;
        for p in from {
            let mut best = f64::INFINITY;
            for q in to {
                best = best.min(((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt());
            }
            sum += best;
        }
        sum / from.len() as f64
    };
    (directed(a, b) + directed(b, a)) / 2.0
}

/// Pixel-count region scores: (jaccard, dice, ad_area).
pub fn region_brute(a: &[bool], b: &[bool]) -> (f64, f64, f64) {
    let mut inter = 0.0;
    let mut union = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for k in 0..a.len() {
        if a[k] && b[k] {
            inter += 1.0;
        }
        if a[k] || b[k] {
            union += 1.0;
        }
        if a[k] {
            na += 1.0;
        }
        if b[k] {
            nb += 1.0;
        }
    }
    (inter / union, 2.0 * inter / (na + nb), 1.0 - inter / union)
}
