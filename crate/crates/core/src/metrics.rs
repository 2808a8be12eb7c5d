//! Agreement between an automatic and a manual lumen segmentation.
//!
//! Region scores count pixels. Curve scores work on sampled contour points
//! with Euclidean distance `sqrt(dx^2 + dy^2)`, in pixels and scaled by the
//! pixel spacing for millimetres.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, Contour, Point};
use crate::pipeline::region::{largest_component, trace_boundary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub jacc: f64,
    pub di: f64,
    pub pad: f64,
    /// One minus the Jaccard index, the area form of the average distance.
    pub ad_area: f64,
    pub ad_curve_px: f64,
    pub ad_curve_mm: f64,
    pub hd_px: f64,
    pub hd_mm: f64,
}

impl MetricsReport {
    pub const FIELDS: [&'static str; 8] = [
        "jacc",
        "di",
        "pad",
        "ad_area",
        "ad_curve_px",
        "ad_curve_mm",
        "hd_px",
        "hd_mm",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.jacc,
            self.di,
            self.pad,
            self.ad_area,
            self.ad_curve_px,
            self.ad_curve_mm,
            self.hd_px,
            self.hd_mm,
        ]
    }
}

impl MetricsReport {
    /// Scores charged to a frame whose segmentation failed: no overlap, full
    /// area error and unbounded curve distances.
    pub const FAILED: MetricsReport = MetricsReport {
        jacc: 0.0,
        di: 0.0,
        pad: 1.0,
        ad_area: 1.0,
        ad_curve_px: f64::INFINITY,
        ad_curve_mm: f64::INFINITY,
        hd_px: f64::INFINITY,
        hd_mm: f64::INFINITY,
    };

    fn from_values(v: [f64; 8]) -> Self {
        Self {
            jacc: v[0],
            di: v[1],
            pad: v[2],
            ad_area: v[3],
            ad_curve_px: v[4],
            ad_curve_mm: v[5],
            hd_px: v[6],
            hd_mm: v[7],
        }
    }
}

/// Per-field mean and sample standard deviation over a batch of frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub frames: usize,
    pub mean: MetricsReport,
    /// Zero for a single frame.
    pub std: MetricsReport,
}

pub fn summarize(reports: &[MetricsReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = reports.len() as f64;
    let mut mean = [0.0; 8];
    for r in reports {
        for (m, v) in mean.iter_mut().zip(r.values()) {
            *m += v / n;
        }
    }
    let mut std = [0.0; 8];
    if reports.len() > 1 {
        for r in reports {
            for ((s, v), m) in std.iter_mut().zip(r.values()).zip(mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / (n - 1.0)).sqrt();
        }
    }
    Ok(Summary {
        frames: reports.len(),
        mean: MetricsReport::from_values(mean),
        std: MetricsReport::from_values(std),
    })
}

struct Overlap {
    inter: usize,
    auto: usize,
    manual: usize,
}

fn overlap(auto: &BinaryMask, manual: &BinaryMask) -> Result<Overlap> {
    if !auto.same_shape(manual) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            auto.width(),
            auto.height(),
            manual.width(),
            manual.height()
        )));
    }
    let mut o = Overlap {
        inter: 0,
        auto: 0,
        manual: 0,
    };
    for (&a, &m) in auto.bits().iter().zip(manual.bits()) {
        o.auto += a as usize;
        o.manual += m as usize;
        o.inter += (a && m) as usize;
    }
    Ok(o)
}

fn nonempty_union(o: &Overlap) -> Result<()> {
    if o.auto == 0 && o.manual == 0 {
        Err(Error::EmptyMasks)
    } else {
        Ok(())
    }
}

pub fn jaccard(auto: &BinaryMask, manual: &BinaryMask) -> Result<f64> {
    let o = overlap(auto, manual)?;
    nonempty_union(&o)?;
    Ok(o.inter as f64 / (o.auto + o.manual - o.inter) as f64)
}

pub fn dice(auto: &BinaryMask, manual: &BinaryMask) -> Result<f64> {
    let o = overlap(auto, manual)?;
    nonempty_union(&o)?;
    Ok(2.0 * o.inter as f64 / (o.auto + o.manual) as f64)
}

/// Area difference relative to the manual area. Not symmetric.
pub fn pad(auto: &BinaryMask, manual: &BinaryMask) -> Result<f64> {
    let o = overlap(auto, manual)?;
    if o.manual == 0 {
        return Err(Error::InvalidParameter("manual mask is empty".into()));
    }
    Ok((o.auto as f64 - o.manual as f64).abs() / o.manual as f64)
}

/// `1 - |A n B| / (|A| + |B| - |A n B|)`.
pub fn ad_area(auto: &BinaryMask, manual: &BinaryMask) -> Result<f64> {
    let o = overlap(auto, manual)?;
    nonempty_union(&o)?;
    Ok(1.0 - o.inter as f64 / ((o.auto + o.manual) - o.inter) as f64)
}

/// Nearest-point lookup over a point set sorted by x.
struct SortedPoints {
    pts: Vec<Point>,
}

impl SortedPoints {
    fn new(points: &[Point]) -> Self {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
        Self { pts }
    }

    /// Smallest squared distance from `q` to the set.
    fn nearest_sq(&self, q: Point) -> f64 {
        let start = self.pts.partition_point(|p| p.x < q.x);
        let mut best = f64::INFINITY;
        for p in &self.pts[start..] {
            let dx = p.x - q.x;
            if dx * dx > best {
                break;
            }
            best = best.min(q.dist_sq(*p));
        }
        for p in self.pts[..start].iter().rev() {
            let dx = q.x - p.x;
            if dx * dx > best {
                break;
            }
            best = best.min(q.dist_sq(*p));
        }
        best
    }
}

fn nonempty(c: &Contour) -> Result<()> {
    if c.is_empty() {
        Err(Error::EmptyContour)
    } else {
        Ok(())
    }
}

/// Nearest distances from each point of `from` to the set `to`, in order.
fn nearest_distances(from: &Contour, to: &Contour) -> Vec<f64> {
    let index = SortedPoints::new(to.points());
    from.points().iter().map(|&p| index.nearest_sq(p).sqrt()).collect()
}

fn directed_mean(from: &Contour, to: &Contour) -> f64 {
    let d = nearest_distances(from, to);
    d.iter().sum::<f64>() / d.len() as f64
}

fn directed_max(from: &Contour, to: &Contour) -> f64 {
    nearest_distances(from, to).into_iter().fold(0.0, f64::max)
}

/// Symmetric mean nearest-point distance, scaled by `spacing_mm`.
pub fn ad_curve(auto: &Contour, manual: &Contour, spacing_mm: f64) -> Result<f64> {
    nonempty(auto)?;
    nonempty(manual)?;
    Ok((directed_mean(auto, manual) + directed_mean(manual, auto)) / 2.0 * spacing_mm)
}

/// Symmetric Hausdorff distance, scaled by `spacing_mm`.
pub fn hausdorff(auto: &Contour, manual: &Contour, spacing_mm: f64) -> Result<f64> {
    nonempty(auto)?;
    nonempty(manual)?;
    Ok(directed_max(auto, manual).max(directed_max(manual, auto)) * spacing_mm)
}

/// Largest distance over all point pairs (the literal max-max reading),
/// kept for audit next to [`hausdorff`].
pub fn hd_pairwise(auto: &Contour, manual: &Contour, spacing_mm: f64) -> Result<f64> {
    nonempty(auto)?;
    nonempty(manual)?;
    let mut best: f64 = 0.0;
    for a in auto.points() {
        for b in manual.points() {
            best = best.max(a.dist_sq(*b));
        }
    }
    Ok(best.sqrt() * spacing_mm)
}

/// Outer boundary of the largest foreground component.
pub fn mask_contour(mask: &BinaryMask) -> Contour {
    trace_boundary(&largest_component(mask))
}

pub fn evaluate(auto: &BinaryMask, manual: &BinaryMask, spacing_mm: f64) -> Result<MetricsReport> {
    if !(spacing_mm > 0.0 && spacing_mm.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "spacing_mm must be positive, got {spacing_mm}"
        )));
    }
    let jacc = jaccard(auto, manual)?;
    let di = dice(auto, manual)?;
    let pad = pad(auto, manual)?;
    let ad_area = ad_area(auto, manual)?;
    let (ca, cm) = (mask_contour(auto), mask_contour(manual));
    let ad_px = ad_curve(&ca, &cm, 1.0)?;
    let hd_px = hausdorff(&ca, &cm, 1.0)?;
    Ok(MetricsReport {
        jacc,
        di,
        pad,
        ad_area,
        ad_curve_px: ad_px,
        ad_curve_mm: ad_px * spacing_mm,
        hd_px,
        hd_mm: hd_px * spacing_mm,
    })
}
