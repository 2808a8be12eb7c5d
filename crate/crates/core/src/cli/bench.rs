use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{list_frames, stem, thread_pool};
use crate::error::{Error, Result};
use crate::image::{read_gray_image, read_mask, BinaryMask, GrayImage};
use crate::metrics::{evaluate, summarize, MetricsReport, Summary};
use crate::pipeline::{segment_lumen, Clusterer, PipelineConfig};

/// One frame with its ground-truth lumen.
pub struct Frame {
    pub name: String,
    pub image: GrayImage,
    pub truth: BinaryMask,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: Clusterer,
    pub failed: usize,
    pub summary: Summary,
    pub seconds_per_frame: f64,
    pub max_seconds_per_frame: f64,
    /// Per-frame scores in suite order; failed frames carry
    /// [`MetricsReport::FAILED`].
    #[serde(skip)]
    pub per_frame: Vec<MetricsReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub ncm: MethodReport,
    pub fcm: MethodReport,
}

impl BenchReport {
    pub fn ncm_beats_fcm_on_di(&self) -> bool {
        self.ncm.summary.mean.di > self.fcm.summary.mean.di
    }
}

/// Runs the pipeline with `cfg` over every frame and scores the result.
/// Pixel spacing comes from each frame's image.
pub fn score_suite(frames: &[Frame], cfg: &PipelineConfig, jobs: usize) -> Result<MethodReport> {
    if frames.is_empty() {
        return Err(Error::EmptyData);
    }
    let scored: Vec<(Option<MetricsReport>, f64)> = thread_pool(jobs)?.install(|| {
        frames
            .par_iter()
            .map(|f| {
                let start = Instant::now();
                let report = segment_lumen(&f.image, cfg)
                    .and_then(|r| evaluate(&r.lumen_mask, &f.truth, f.image.spacing_mm()))
                    .ok();
                (report, start.elapsed().as_secs_f64())
            })
            .collect()
    });
    let seconds: f64 = scored.iter().map(|(_, t)| t).sum();
    let slowest = scored.iter().map(|(_, t)| *t).fold(0.0, f64::max);
    let failed = scored.iter().filter(|(r, _)| r.is_none()).count();
    let per_frame: Vec<MetricsReport> = scored
        .into_iter()
        .map(|(r, _)| r.unwrap_or(MetricsReport::FAILED))
        .collect();
    Ok(MethodReport {
        method: cfg.clusterer,
        failed,
        summary: summarize(&per_frame)?,
        seconds_per_frame: seconds / frames.len() as f64,
        max_seconds_per_frame: slowest,
        per_frame,
    })
}

/// NCM and FCM over the same frames with otherwise identical settings.
pub fn compare(frames: &[Frame], cfg: &PipelineConfig, jobs: usize) -> Result<BenchReport> {
    let with = |clusterer| PipelineConfig {
        clusterer,
        ..cfg.clone()
    };
    Ok(BenchReport {
        ncm: score_suite(frames, &with(Clusterer::Ncm), jobs)?,
        fcm: score_suite(frames, &with(Clusterer::Fcm), jobs)?,
    })
}

fn mask_for(image: &Path) -> Option<PathBuf> {
    let s = stem(image);
    ["pgm", "png"]
        .iter()
        .map(|ext| image.with_file_name(format!("{s}_mask.{ext}")))
        .find(|p| p.is_file())
}

/// Frames of a suite directory: every image with a sibling `<stem>_mask`.
pub fn load_suite(dir: &Path, spacing_mm: Option<f64>) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    for path in list_frames(dir)? {
        let truth_path = mask_for(&path)
            .ok_or_else(|| Error::InvalidParameter(format!("no ground-truth mask for {}", path.display())))?;
        let mut image = read_gray_image(&path)?;
        if let Some(s) = spacing_mm {
            image = image.with_spacing(s)?;
        }
        let truth = read_mask(&truth_path)?;
        frames.push(Frame {
            name: stem(&path),
            image,
            truth,
        });
    }
    if frames.is_empty() {
        return Err(Error::InvalidParameter(format!("no frames in {}", dir.display())));
    }
    Ok(frames)
}

fn cell(mean: f64, std: f64) -> String {
    format!("{mean:.4} ± {std:.4}")
}

pub fn format_table(report: &BenchReport) -> String {
    let mut out = String::new();
    let header = [
        "method",
        "frames",
        "failed",
        "DI",
        "JACC",
        "PAD",
        "AD_area",
        "AD_curve_mm",
        "HD_px",
        "HD_mm",
        "s/frame",
    ];
    writeln!(
        out,
        "{:<6} {:>6} {:>6} {:>17} {:>17} {:>17} {:>17} {:>17} {:>17} {:>17} {:>8}",
        header[0],
        header[1],
        header[2],
        header[3],
        header[4],
        header[5],
        header[6],
        header[7],
        header[8],
        header[9],
        header[10]
    )
    .expect("write to string");
    for (label, r) in [("NCM", &report.ncm), ("FCM", &report.fcm)] {
        let (m, s) = (&r.summary.mean, &r.summary.std);
        writeln!(
            out,
            "{:<6} {:>6} {:>6} {:>17} {:>17} {:>17} {:>17} {:>17} {:>17} {:>17} {:>8.3}",
            label,
            r.summary.frames,
            r.failed,
            cell(m.di, s.di),
            cell(m.jacc, s.jacc),
            cell(m.pad, s.pad),
            cell(m.ad_area, s.ad_area),
            cell(m.ad_curve_mm, s.ad_curve_mm),
            cell(m.hd_px, s.hd_px),
            cell(m.hd_mm, s.hd_mm),
            r.seconds_per_frame
        )
        .expect("write to string");
    }
    writeln!(
        out,
        "NCM mean DI > FCM mean DI: {} ({:.6} vs {:.6})",
        report.ncm_beats_fcm_on_di(),
        report.ncm.summary.mean.di,
        report.fcm.summary.mean.di
    )
    .expect("write to string");
    out
}
