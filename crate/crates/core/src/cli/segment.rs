use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use super::{list_frames, stem, thread_pool};
use crate::error::{Error, Result};
use crate::image::{
    read_gray_image, write_atomic, write_contour_csv, write_gray_image, write_gray_png, write_mask, GrayImage,
};
use crate::ns::ns_transform;
use crate::pipeline::{segment_lumen, PipelineResult, StageTimings};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct FrameRecord {
    pub input: PathBuf,
    pub status: FrameStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations_run: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lumen_cluster: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lumen_px: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour_points: Option<usize>,
    pub outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub succeeded: usize,
    pub failed: usize,
    pub frames: Vec<FrameRecord>,
}

impl Manifest {
    pub fn all_ok(&self) -> bool {
        self.failed == 0
    }
}

/// Output paths for one input frame.
pub struct FrameOutputs {
    pub mask: PathBuf,
    pub contour: PathBuf,
    pub overlay: PathBuf,
    pub ns: [PathBuf; 3],
}

impl FrameOutputs {
    pub fn new(outdir: &Path, input: &Path) -> Self {
        let s = stem(input);
        let p = |suffix: &str| outdir.join(format!("{s}{suffix}"));
        Self {
            mask: p("_mask.pgm"),
            contour: p("_contour.csv"),
            overlay: p("_overlay.png"),
            ns: [p("_ns_t.pgm"), p("_ns_i.pgm"), p("_ns_f.pgm")],
        }
    }
}

/// The input with contour pixels drawn at full intensity.
pub fn overlay(img: &GrayImage, result: &PipelineResult) -> Result<GrayImage> {
    let (w, h) = (img.width(), img.height());
    let mut pixels = img.pixels().to_vec();
    for p in result.contour.points() {
        let (x, y) = (p.x.round(), p.y.round());
        if x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h {
            pixels[y as usize * w + x as usize] = 1.0;
        }
    }
    GrayImage::new(w, h, pixels, img.spacing_mm())
}

fn segment_frame(input: &Path, cfg: &RunConfig, outdir: &Path) -> FrameRecord {
    let mut record = FrameRecord {
        input: input.to_path_buf(),
        status: FrameStatus::Failed,
        error: None,
        spacing_mm: None,
        iterations_run: None,
        converged: None,
        lumen_cluster: None,
        lumen_px: None,
        contour_points: None,
        outputs: Vec::new(),
        timings: None,
    };
    match try_segment_frame(input, cfg, outdir, &mut record) {
        Ok(()) => record.status = FrameStatus::Ok,
        Err(e) => {
            record.error = Some(e.to_string());
            record.outputs.clear();
        }
    }
    record
}

fn try_segment_frame(input: &Path, cfg: &RunConfig, outdir: &Path, record: &mut FrameRecord) -> Result<()> {
    let mut img = read_gray_image(input)?;
    if let Some(s) = cfg.spacing_mm {
        img = img.with_spacing(s)?;
    }
    record.spacing_mm = Some(img.spacing_mm());
    let result = segment_lumen(&img, &cfg.pipeline)?;
    let out = FrameOutputs::new(outdir, input);

    // the mask goes last so a failed frame never leaves one behind
    write_contour_csv(&result.contour, &out.contour)?;
    write_gray_png(&overlay(&img, &result)?, &out.overlay)?;
    let mut written = vec![out.contour.clone(), out.overlay.clone()];
    if cfg.write_ns_maps {
        let ns = ns_transform(&img, cfg.pipeline.ns_window)?;
        for (map, path) in ns.to_images(img.spacing_mm()).iter().zip(&out.ns) {
            write_gray_image(map, path)?;
            written.push(path.clone());
        }
    }
    write_mask(&result.lumen_mask, &out.mask)?;
    written.insert(0, out.mask.clone());

    record.outputs = written;
    record.iterations_run = Some(result.clustering.iterations_run());
    record.converged = Some(result.clustering.converged());
    record.lumen_cluster = Some(result.lumen_cluster);
    record.lumen_px = Some(result.lumen_mask.count());
    record.contour_points = Some(result.contour.len());
    if cfg.record_timings {
        record.timings = Some(result.timings);
    }
    Ok(())
}

/// Segments one image or every frame in a directory into `outdir` and
/// writes the run manifest. Per-frame failures are recorded, not returned.
pub fn cmd_segment(input: &Path, cfg: &RunConfig, outdir: &Path) -> Result<Manifest> {
    let frames = if input.is_dir() {
        let frames = list_frames(input)?;
        if frames.is_empty() {
            return Err(Error::InvalidParameter(format!("no frames in {}", input.display())));
        }
        frames
    } else {
        vec![input.to_path_buf()]
    };
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;

    let records: Vec<FrameRecord> =
        thread_pool(cfg.jobs)?.install(|| frames.par_iter().map(|f| segment_frame(f, cfg, outdir)).collect());
    let failed = records.iter().filter(|r| r.status == FrameStatus::Failed).count();
    let mut echo = cfg.clone();
    echo.input = Some(input.to_path_buf());
    echo.output = Some(outdir.to_path_buf());
    let manifest = Manifest {
        config: echo,
        succeeded: records.len() - failed,
        failed,
        frames: records,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_atomic(&outdir.join(MANIFEST_NAME), json.as_bytes())?;
    Ok(manifest)
}
