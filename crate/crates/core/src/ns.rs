//! Neutrosophic image domain: each pixel becomes a (T, I, F) triple.
//!
//! T is the min-max normalized local mean, I the min-max normalized absolute
//! deviation of a pixel from its local mean, and F = 1 - T.

use crate::error::Result;
use crate::image::{box_mean, check_window, GrayImage};

/// Default local-mean window.
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct NsImage {
    width: usize,
    height: usize,
    window: usize,
    t_map: Vec<f64>,
    i_map: Vec<f64>,
    f_map: Vec<f64>,
}

impl NsImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn truth(&self) -> &[f64] {
        &self.t_map
    }

    pub fn indeterminacy(&self) -> &[f64] {
        &self.i_map
    }

    pub fn falsity(&self) -> &[f64] {
        &self.f_map
    }

    fn as_image(&self, values: &[f64], spacing_mm: f64) -> GrayImage {
        GrayImage::new(self.width, self.height, values.to_vec(), spacing_mm)
            .expect("neutrosophic maps stay within [0, 1]")
    }

    /// The three maps as images, for dumping to disk.
    pub fn to_images(&self, spacing_mm: f64) -> [GrayImage; 3] {
        [
            self.as_image(&self.t_map, spacing_mm),
            self.as_image(&self.i_map, spacing_mm),
            self.as_image(&self.f_map, spacing_mm),
        ]
    }
}

/// Windowed mean with replicate-clamped borders.
pub fn local_mean(img: &GrayImage, window: usize) -> Result<Vec<f64>> {
    check_window(window)?;
    Ok(box_mean(img.pixels(), img.width(), img.height(), window))
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// `(v - min) / (max - min)`, or `fallback` everywhere when the range is empty.
fn normalize(values: &[f64], fallback: f64) -> Vec<f64> {
    let (lo, hi) = min_max(values);
    let range = hi - lo;
    if range <= 0.0 {
        return vec![fallback; values.len()];
    }
    values.iter().map(|&v| ((v - lo) / range).clamp(0.0, 1.0)).collect()
}

pub fn ns_transform(img: &GrayImage, window: usize) -> Result<NsImage> {
    let mean = local_mean(img, window)?;
    let deviation: Vec<f64> = img.pixels().iter().zip(&mean).map(|(&g, &m)| (g - m).abs()).collect();

    // a flat local mean carries no evidence either way
    let t_map = normalize(&mean, 0.5);
    let i_map = normalize(&deviation, 0.0);
    let f_map = t_map.iter().map(|&t| 1.0 - t).collect();

    Ok(NsImage {
        width: img.width(),
        height: img.height(),
        window,
        t_map,
        i_map,
        f_map,
    })
}
