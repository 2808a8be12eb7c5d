//! Lumen boundary detection for a single frame.
//!
//! Stages: intensity normalization (plus optional smoothing and catheter
//! masking), clustering of the pixel features, mean-filter smoothing of the
//! per-label indicator maps, lumen cluster selection, region cleanup and
//! boundary tracing.

pub mod region;

use std::time::{Duration, Instant};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cluster::argmax;
use crate::error::{Error, Result};
use crate::fcm::{fcm_assign, fcm_fit, FcmParams, FcmState};
use crate::image::{box_mean, check_window, BinaryMask, Contour, GrayImage, LabelMap};
use crate::ncm::{ncm_assign, ncm_fit, top_two, NcmParams, NcmState};
use crate::ns::{ns_transform, DEFAULT_WINDOW};

use region::{components, fill_holes, merge_adjacent, remove_small, trace_boundary};

/// Smallest frame the pipeline accepts, per side.
pub const MIN_FRAME: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LumenRule {
    /// Cluster with the lowest center intensity.
    #[default]
    DarkestCluster,
    /// Cluster owning the largest component that touches the ring just
    /// outside the catheter disk.
    CenterAdjacent,
}

/// Which per-pixel features are clustered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// Normalized intensity.
    #[default]
    Intensity,
    /// Truth map of the neutrosophic transform.
    NsTruth,
    /// Truth and indeterminacy maps as a 2-D feature.
    NsTruthIndeterminacy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Clusterer {
    #[default]
    Ncm,
    /// Plain fuzzy c-means with the same cluster count, fuzzifier, tolerance,
    /// iteration cap and seed. Produces no ambiguity or outlier labels.
    Fcm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub ncm: NcmParams,
    pub clusterer: Clusterer,
    pub features: FeatureMode,
    pub ns_window: usize,
    pub smooth_w: usize,
    pub preprocess_w: usize,
    pub catheter_radius_px: usize,
    pub min_region_px: usize,
    pub lumen_rule: LumenRule,
    /// Merge ambiguity pixels that touch the lumen and sit between the lumen
    /// cluster and another one.
    pub merge_ambiguity: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            ncm: NcmParams::default(),
            clusterer: Clusterer::Ncm,
            features: FeatureMode::Intensity,
            ns_window: DEFAULT_WINDOW,
            smooth_w: 5,
            preprocess_w: 1,
            catheter_radius_px: 0,
            min_region_px: 200,
            lumen_rule: LumenRule::DarkestCluster,
            merge_ambiguity: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.ncm.clone().validated()?;
        check_window(self.smooth_w)?;
        check_window(self.preprocess_w)?;
        check_window(self.ns_window)?;
        if self.min_region_px == 0 {
            return Err(Error::InvalidParameter("min_region_px must be >= 1".into()));
        }
        Ok(())
    }

    fn fcm_params(&self) -> FcmParams {
        FcmParams {
            clusters: self.ncm.clusters,
            fuzziness: self.ncm.fuzziness,
            epsilon: self.ncm.epsilon,
            max_iter: self.ncm.max_iter,
            seed: self.ncm.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClusterFit {
    Ncm(NcmState),
    Fcm(FcmState),
}

impl ClusterFit {
    pub fn iterations_run(&self) -> usize {
        match self {
            ClusterFit::Ncm(s) => s.iterations_run,
            ClusterFit::Fcm(s) => s.iterations_run,
        }
    }

    pub fn converged(&self) -> bool {
        match self {
            ClusterFit::Ncm(s) => s.converged,
            ClusterFit::Fcm(s) => s.converged,
        }
    }

    pub fn centers(&self) -> &Array2<f64> {
        match self {
            ClusterFit::Ncm(s) => &s.centers,
            ClusterFit::Fcm(s) => &s.centers,
        }
    }

    pub fn ncm_state(&self) -> Option<&NcmState> {
        match self {
            ClusterFit::Ncm(s) => Some(s),
            ClusterFit::Fcm(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    #[serde(serialize_with = "secs")]
    pub preprocess: Duration,
    #[serde(serialize_with = "secs")]
    pub cluster: Duration,
    #[serde(serialize_with = "secs")]
    pub smooth: Duration,
    #[serde(serialize_with = "secs")]
    pub select: Duration,
    #[serde(serialize_with = "secs")]
    pub cleanup: Duration,
    #[serde(serialize_with = "secs")]
    pub contour: Duration,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.preprocess + self.cluster + self.smooth + self.select + self.cleanup + self.contour
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    /// Smoothed labels.
    pub label_map: LabelMap,
    pub lumen_mask: BinaryMask,
    pub contour: Contour,
    pub clustering: ClusterFit,
    /// Index of the cluster chosen as lumen.
    pub lumen_cluster: usize,
    pub timings: StageTimings,
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn frame_center(width: usize, height: usize) -> (f64, f64) {
    ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0)
}

/// Min-max normalization, optional mean filter, then the central catheter
/// disk is overwritten with the median intensity. A constant image is left
/// as it is.
pub fn preprocess(img: &GrayImage, cfg: &PipelineConfig) -> Result<GrayImage> {
    check_window(cfg.preprocess_w)?;
    let (lo, hi) = img
        .pixels()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut pixels: Vec<f64> = if hi > lo {
        img.pixels().iter().map(|&v| (v - lo) / (hi - lo)).collect()
    } else {
        img.pixels().to_vec()
    };
    if cfg.preprocess_w > 1 {
        pixels = box_mean(&pixels, img.width(), img.height(), cfg.preprocess_w);
    }
    if cfg.catheter_radius_px > 0 {
        let fill = median(&pixels);
        let (cx, cy) = frame_center(img.width(), img.height());
        let r2 = (cfg.catheter_radius_px * cfg.catheter_radius_px) as f64;
        for y in 0..img.height() {
            for x in 0..img.width() {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= r2 {
                    pixels[y * img.width() + x] = fill;
                }
            }
        }
    }
    Ok(img.with_pixels(pixels))
}

fn features(img: &GrayImage, cfg: &PipelineConfig) -> Result<Array2<f64>> {
    let n = img.pixels().len();
    Ok(match cfg.features {
        FeatureMode::Intensity => Array2::from_shape_vec((n, 1), img.pixels().to_vec()).expect("shape"),
        FeatureMode::NsTruth => {
            let ns = ns_transform(img, cfg.ns_window)?;
            Array2::from_shape_vec((n, 1), ns.truth().to_vec()).expect("shape")
        }
        FeatureMode::NsTruthIndeterminacy => {
            let ns = ns_transform(img, cfg.ns_window)?;
            Array2::from_shape_fn(
                (n, 2),
                |(i, a)| {
                    if a == 0 {
                        ns.truth()[i]
                    } else {
                        ns.indeterminacy()[i]
                    }
                },
            )
        }
    })
}

/// Mode filter over label indicators: each label's indicator map is box
/// averaged and every pixel takes the label with the highest local score.
fn smooth_labels(labels: &[u8], n_labels: usize, width: usize, height: usize, window: usize) -> Vec<u8> {
    if window == 1 {
        return labels.to_vec();
    }
    let mut best_score = vec![f64::NEG_INFINITY; labels.len()];
    let mut best = vec![0u8; labels.len()];
    for l in 0..n_labels as u8 {
        if !labels.contains(&l) {
            continue;
        }
        let indicator: Vec<f64> = labels.iter().map(|&v| if v == l { 1.0 } else { 0.0 }).collect();
        let score = box_mean(&indicator, width, height, window);
        for (k, &s) in score.iter().enumerate() {
            if s > best_score[k] {
                best_score[k] = s;
                best[k] = l;
            }
        }
    }
    best
}

fn ring_mask(width: usize, height: usize, inner: usize) -> BinaryMask {
    let (cx, cy) = frame_center(width, height);
    let r_in = inner as f64;
    let r_out = r_in + 3.0;
    BinaryMask::from_fn(width, height, |x, y| {
        let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
        d > r_in && d <= r_out || (inner == 0 && d <= r_out)
    })
}

fn darkest(centers: &Array2<f64>) -> usize {
    let col: Vec<f64> = centers.column(0).iter().map(|&v| -v).collect();
    argmax(&col)
}

/// Runs the full pipeline on one frame.
pub fn segment_lumen(img: &GrayImage, cfg: &PipelineConfig) -> Result<PipelineResult> {
    cfg.validate()?;
    if img.width() < MIN_FRAME || img.height() < MIN_FRAME {
        return Err(Error::InvalidParameter(format!(
            "frame {}x{} is smaller than {MIN_FRAME}x{MIN_FRAME}",
            img.width(),
            img.height()
        )));
    }
    let (w, h) = (img.width(), img.height());
    let mut timings = StageTimings::default();

    let clock = Instant::now();
    let pre = preprocess(img, cfg)?;
    timings.preprocess = clock.elapsed();

    let clock = Instant::now();
    let data = features(&pre, cfg)?;
    let c = cfg.ncm.clusters;
    let (fit, raw_labels) = match cfg.clusterer {
        Clusterer::Ncm => {
            let state = ncm_fit(data.view(), &cfg.ncm)?;
            if state.degenerate {
                return Err(Error::Degenerate("frame has a single intensity value".into()));
            }
            let labels: Vec<u8> = ncm_assign(&state).labels.into_iter().map(|l| l as u8).collect();
            (ClusterFit::Ncm(state), labels)
        }
        Clusterer::Fcm => {
            let first = data.row(0);
            if data.rows().into_iter().all(|r| r == first) {
                return Err(Error::Degenerate("frame has a single intensity value".into()));
            }
            let state = fcm_fit(data.view(), &cfg.fcm_params())?;
            let labels: Vec<u8> = fcm_assign(&state).into_iter().map(|l| l as u8).collect();
            (ClusterFit::Fcm(state), labels)
        }
    };
    timings.cluster = clock.elapsed();

    let clock = Instant::now();
    let smoothed = smooth_labels(&raw_labels, c + 2, w, h, cfg.smooth_w);
    let label_map = LabelMap::new(w, h, c, smoothed)?;
    timings.smooth = clock.elapsed();

    let clock = Instant::now();
    let (lumen_cluster, seed_region) = select_lumen(&label_map, fit.centers(), cfg);
    timings.select = clock.elapsed();

    let clock = Instant::now();
    let region = remove_small(&seed_region, cfg.min_region_px);
    if region.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut mask = fill_holes(&region);
    if let (true, Some(state)) = (cfg.merge_ambiguity, fit.ncm_state()) {
        let border = lumen_border_ambiguity(&label_map, state, lumen_cluster);
        mask = fill_holes(&merge_adjacent(&mask, &border));
    }
    timings.cleanup = clock.elapsed();

    let clock = Instant::now();
    let contour = trace_boundary(&mask);
    // the reported mask is exactly the region the contour encloses
    let lumen_mask = contour.rasterize(w, h);
    timings.contour = clock.elapsed();

    Ok(PipelineResult {
        label_map,
        lumen_mask,
        contour,
        clustering: fit,
        lumen_cluster,
        timings,
    })
}

/// Picks the lumen cluster and the component of it that seeds the mask.
/// Ambiguity pixels whose two strongest clusters include the lumen cluster,
/// i.e. those undecided between the lumen and a neighbour.
fn lumen_border_ambiguity(labels: &LabelMap, state: &NcmState, lumen: usize) -> BinaryMask {
    let amb = labels.ambiguity_label();
    let w = labels.width();
    BinaryMask::from_fn(w, labels.height(), |x, y| {
        if labels.get(x, y) != amb {
            return false;
        }
        let row = state.t.row(y * w + x);
        let (p, q) = top_two(row.as_slice().expect("row-major memberships"));
        p == lumen || q == lumen
    })
}

fn select_lumen(labels: &LabelMap, centers: &Array2<f64>, cfg: &PipelineConfig) -> (usize, BinaryMask) {
    let largest = |mask: &BinaryMask, filter: &dyn Fn(&[usize]) -> bool| -> Option<Vec<usize>> {
        components(mask)
            .into_iter()
            .filter(|c| filter(c))
            .fold(None, |best: Option<Vec<usize>>, c| match best {
                Some(b) if b.len() >= c.len() => Some(b),
                _ => Some(c),
            })
    };
    let to_mask = |comp: Option<Vec<usize>>| {
        let mut m = BinaryMask::empty(labels.width(), labels.height());
        for k in comp.unwrap_or_default() {
            m.set(k % labels.width(), k / labels.width(), true);
        }
        m
    };

    if cfg.lumen_rule == LumenRule::CenterAdjacent {
        let ring = ring_mask(labels.width(), labels.height(), cfg.catheter_radius_px);
        let touches = |c: &[usize]| c.iter().any(|&k| ring.bits()[k]);
        let mut best: Option<(usize, Vec<usize>)> = None;
        for j in 0..labels.clusters() {
            if let Some(comp) = largest(&labels.indicator(j as u8), &touches) {
                if best.as_ref().is_none_or(|(_, b)| comp.len() > b.len()) {
                    best = Some((j, comp));
                }
            }
        }
        if let Some((j, comp)) = best {
            return (j, to_mask(Some(comp)));
        }
    }

    let j = darkest(centers);
    (j, to_mask(largest(&labels.indicator(j as u8), &|_| true)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dark disk of radius `r` inside a bright ring 10 px thick on a mid-gray
    /// background.
    fn disk_image(size: usize, r: f64) -> (GrayImage, BinaryMask) {
        let c = size as f64 / 2.0;
        let d2 = move |x: usize, y: usize| (x as f64 - c).powi(2) + (y as f64 - c).powi(2);
        let inside_fn = move |x, y| d2(x, y) <= r * r;
        let img = GrayImage::from_fn(size, size, |x, y| {
            if inside_fn(x, y) {
                0.05
            } else if d2(x, y) <= (r + 10.0).powi(2) {
                0.8
            } else {
                0.3
            }
        });
        (img, BinaryMask::from_fn(size, size, inside_fn))
    }

    #[test]
    fn preprocess_fixtures() {
        let cfg = PipelineConfig::default();
        let img = GrayImage::from_fn(4, 4, |x, _| 0.2 + 0.5 * x as f64 / 3.0);
        let out = preprocess(&img, &cfg).unwrap();
        assert_eq!(out.get(0, 0), 0.0);
        assert_eq!(out.get(3, 0), 1.0);

        let flat = GrayImage::filled(4, 4, 0.3);
        assert_eq!(preprocess(&flat, &cfg).unwrap(), flat);
    }

    #[test]
    fn catheter_disk_takes_the_median() {
        let cfg = PipelineConfig {
            catheter_radius_px: 2,
            ..PipelineConfig::default()
        };
        let img = GrayImage::from_fn(9, 9, |x, y| if (x, y) == (4, 4) { 1.0 } else { (x % 2) as f64 * 0.5 });
        let out = preprocess(&img, &cfg).unwrap();
        let med = median(&preprocess(&img, &PipelineConfig::default()).unwrap().into_pixels());
        assert_eq!(out.get(4, 4), med);
        assert_eq!(out.get(4, 2), med);
        assert_eq!(out.get(0, 0), 0.0);
    }

    #[test]
    fn smoothing_removes_isolated_labels() {
        let mut labels = vec![0u8; 25];
        labels[12] = 1;
        let out = smooth_labels(&labels, 3, 5, 5, 3);
        assert!(out.iter().all(|&l| l == 0));
        assert_eq!(smooth_labels(&labels, 3, 5, 5, 1), labels);
    }

    #[test]
    fn clean_disk_is_recovered() {
        let (img, truth) = disk_image(96, 20.0);
        let res = segment_lumen(&img, &PipelineConfig::default()).unwrap();
        let inter = res
            .lumen_mask
            .bits()
            .iter()
            .zip(truth.bits())
            .filter(|(a, b)| **a && **b)
            .count();
        let di = 2.0 * inter as f64 / (res.lumen_mask.count() + truth.count()) as f64;
        assert!(di > 0.99, "dice {di}");
        assert_eq!(res.contour.rasterize(96, 96), res.lumen_mask);
    }

    #[test]
    fn two_level_disk_is_recovered() {
        // with three clusters on two levels, two centers share the background
        // and its pixels turn ambiguous; none of them may join the lumen
        let c = 128.0;
        let inside = |x: usize, y: usize| (x as f64 - c).powi(2) + (y as f64 - c).powi(2) <= 1600.0;
        let img = GrayImage::from_fn(256, 256, |x, y| if inside(x, y) { 0.05 } else { 0.8 });
        let truth = BinaryMask::from_fn(256, 256, inside);
        let res = segment_lumen(&img, &PipelineConfig::default()).unwrap();
        let di = crate::metrics::dice(&res.lumen_mask, &truth).unwrap();
        assert!(di >= 0.99, "dice {di}");
    }

    #[test]
    fn center_adjacent_rule_picks_the_central_region() {
        // bright central disk, dark corner blob larger than it
        let img = GrayImage::from_fn(64, 64, |x, y| {
            let d = ((x as f64 - 31.5).powi(2) + (y as f64 - 31.5).powi(2)).sqrt();
            if d < 10.0 {
                0.9
            } else if x < 20 {
                0.05
            } else {
                0.5
            }
        });
        let cfg = PipelineConfig {
            lumen_rule: LumenRule::CenterAdjacent,
            min_region_px: 20,
            ..PipelineConfig::default()
        };
        let res = segment_lumen(&img, &cfg).unwrap();
        assert!(res.lumen_mask.get(31, 31));
        assert!(!res.lumen_mask.get(2, 2));
        let dark = segment_lumen(
            &img,
            &PipelineConfig {
                min_region_px: 20,
                ..PipelineConfig::default()
            },
        )
        .unwrap();
        assert!(dark.lumen_mask.get(2, 2));
    }

    #[test]
    fn rejects_small_and_flat_frames() {
        let cfg = PipelineConfig::default();
        assert!(matches!(
            segment_lumen(&GrayImage::filled(16, 40, 0.5), &cfg),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            segment_lumen(&GrayImage::filled(40, 40, 0.5), &cfg),
            Err(Error::Degenerate(_))
        ));
        let fcm = PipelineConfig {
            clusterer: Clusterer::Fcm,
            ..PipelineConfig::default()
        };
        assert!(matches!(
            segment_lumen(&GrayImage::filled(40, 40, 0.5), &fcm),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let ok: PipelineConfig = serde_json::from_str(r#"{"smooth_w": 3, "lumen_rule": "center-adjacent"}"#).unwrap();
        assert_eq!(ok.smooth_w, 3);
        assert_eq!(ok.lumen_rule, LumenRule::CenterAdjacent);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"smooth": 3}"#).is_err());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"ncm": {"k": 3}}"#).is_err());
    }
}
