//! Raster and contour data model plus the file formats shared by every stage.
//!
//! Intensities are always stored as `f64` in `[0, 1]`, whatever the bit depth
//! of the source file. Windowed operations clamp coordinates at the border.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Single-channel image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    spacing_mm: f64,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>, spacing_mm: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format(format!("zero dimension {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Format(format!("intensity {v} outside [0, 1]")));
        }
        if !(spacing_mm > 0.0 && spacing_mm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spacing_mm must be positive, got {spacing_mm}"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            spacing_mm,
        })
    }

    /// Builds an image from `f(x, y)`; values are clamped into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "zero-sized image");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            pixels,
            spacing_mm: 1.0,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn with_spacing(mut self, spacing_mm: f64) -> Result<Self> {
        if !(spacing_mm > 0.0 && spacing_mm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spacing_mm must be positive, got {spacing_mm}"
            )));
        }
        self.spacing_mm = spacing_mm;
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn spacing_mm(&self) -> f64 {
        self.spacing_mm
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    /// Same geometry and spacing, new pixel values (clamped into `[0, 1]`).
    pub(crate) fn with_pixels(&self, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), self.pixels.len());
        Self {
            width: self.width,
            height: self.height,
            pixels: pixels.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            spacing_mm: self.spacing_mm,
        }
    }
}

/// Foreground/background raster; `true` marks lumen.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Bounds-checked lookup; anything outside the frame is background.
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Threshold an image at `level` (inclusive).
    pub fn threshold(img: &GrayImage, level: f64) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            bits: img.pixels().iter().map(|&v| v >= level).collect(),
        }
    }
}

/// Per-pixel cluster labels: `0..clusters` determinate, `clusters` is the
/// ambiguity label and `clusters + 1` the outlier label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    clusters: usize,
    labels: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, clusters: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for a {width}x{height} map",
                labels.len()
            )));
        }
        if clusters + 1 > u8::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "{clusters} clusters do not fit a u8 label map"
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l as usize > clusters + 1) {
            return Err(Error::InvalidParameter(format!(
                "label {l} outside [0, {}]",
                clusters + 1
            )));
        }
        Ok(Self {
            width,
            height,
            clusters,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn ambiguity_label(&self) -> u8 {
        self.clusters as u8
    }

    pub fn outlier_label(&self) -> u8 {
        self.clusters as u8 + 1
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn indicator(&self, label: u8) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l == label).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Ordered boundary polygon in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Contour {
    points: Vec<Point>,
    closed: bool,
}

impl Contour {
    /// A closed contour needs at least three points and no repeated
    /// consecutive point, including the wrap from last to first.
    pub fn closed(points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "closed contour needs >= 3 points, got {}",
                points.len()
            )));
        }
        let n = points.len();
        if (0..n).any(|i| points[i] == points[(i + 1) % n]) {
            return Err(Error::InvalidParameter(
                "closed contour repeats a consecutive point".into(),
            ));
        }
        Ok(Self { points, closed: true })
    }

    pub fn open(points: Vec<Point>) -> Self {
        Self { points, closed: false }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Pixels covered by the contour itself plus every pixel centre with a
    /// nonzero winding number.
    pub fn rasterize(&self, width: usize, height: usize) -> BinaryMask {
        let mut mask = BinaryMask::empty(width, height);
        let n = self.points.len();
        if n == 0 {
            return mask;
        }
        let mut mark = |p: Point| {
            let (x, y) = (p.x.round(), p.y.round());
            if x >= 0.0 && y >= 0.0 && (x as usize) < width && (y as usize) < height {
                mask.set(x as usize, y as usize, true);
            }
        };
        let segments = if self.closed || n == 2 { n } else { n - 1 };
        if n == 1 {
            mark(self.points[0]);
        }
        for i in 0..segments {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            let steps = (b.x - a.x).abs().max((b.y - a.y).abs()).ceil().max(1.0) as usize;
            for s in 0..=steps {
                let t = s as f64 / steps as f64;
                mark(Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t));
            }
        }
        if !self.closed || n < 3 {
            return mask;
        }

        let mut crossings: Vec<(f64, i32)> = Vec::new();
        for y in 0..height {
            let py = y as f64;
            crossings.clear();
            for i in 0..n {
                let a = self.points[i];
                let b = self.points[(i + 1) % n];
                let upward = a.y <= py && b.y > py;
                let downward = b.y <= py && a.y > py;
                if upward || downward {
                    let x = a.x + (py - a.y) / (b.y - a.y) * (b.x - a.x);
                    crossings.push((x, if upward { 1 } else { -1 }));
                }
            }
            if crossings.is_empty() {
                continue;
            }
            crossings.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut winding = 0;
            let mut k = 0;
            for x in 0..width {
                let px = x as f64;
                while k < crossings.len() && crossings[k].0 < px {
                    winding += crossings[k].1;
                    k += 1;
                }
                if winding != 0 {
                    mask.set(x, y, true);
                }
            }
        }
        mask
    }
}

/// Box mean over a `window x window` neighbourhood with replicate-clamped
/// borders. Separable: a horizontal running pass followed by a vertical one.
pub(crate) fn box_mean(values: &[f64], width: usize, height: usize, window: usize) -> Vec<f64> {
    debug_assert!(window % 2 == 1);
    if window == 1 {
        return values.to_vec();
    }
    let r = (window / 2) as isize;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;

    let mut rows = vec![0.0; values.len()];
    for y in 0..height {
        let row = &values[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for dx in -r..=r {
                acc += row[clamp(x as isize + dx, width)];
            }
            rows[y * width + x] = acc;
        }
    }
    let norm = (window * window) as f64;
    let mut out = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for dy in -r..=r {
                acc += rows[clamp(y as isize + dy, height) * width + x];
            }
            out[y * width + x] = acc / norm;
        }
    }
    out
}

pub(crate) fn check_window(window: usize) -> Result<()> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "window must be odd and >= 1, got {window}"
        )));
    }
    Ok(())
}

/// Arithmetic mean over each `window x window` neighbourhood.
pub fn mean_filter(img: &GrayImage, window: usize) -> Result<GrayImage> {
    check_window(window)?;
    Ok(img.with_pixels(box_mean(img.pixels(), img.width(), img.height(), window)))
}

// ---------------------------------------------------------------------------
// File formats

#[derive(Deserialize)]
struct Sidecar {
    spacing_mm: Option<f64>,
}

/// Reads a P5 graymap (8 or 16 bit) or an 8-bit grayscale PNG.
///
/// Pixel spacing comes from a JSON sidecar next to the image (same stem,
/// `.json` extension, key `spacing_mm`) and defaults to 1.0.
pub fn read_gray_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = decode_image(&bytes)?;
    let sidecar = path.with_extension("json");
    if sidecar.is_file() {
        let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let meta: Sidecar = serde_json::from_str(&text)?;
        if let Some(spacing) = meta.spacing_mm {
            return img.with_spacing(spacing);
        }
    }
    Ok(img)
}

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else {
        Err(Error::Format("unsupported format (expected P5 graymap or PNG)".into()))
    }
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let dynamic = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Format(e.to_string()))?;
    let gray = match dynamic {
        image::DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(Error::Format(format!(
                "expected 8-bit single-channel PNG, got {:?}",
                other.color()
            )))
        }
    };
    let (w, h) = gray.dimensions();
    let pixels = gray.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
    GrayImage::new(w as usize, h as usize, pixels, 1.0)
}

/// Header tokenizer for netpbm: whitespace separated, `#` comments to EOL.
struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn number(&mut self) -> Result<usize> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b'#') => {
                    while let Some(&c) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if c == b'\n' || c == b'\r' {
                            break;
                        }
                    }
                }
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("malformed graymap header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("header value out of range".into()))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::Format("not a binary graymap (P5)".into()));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number()?;
    let height = cur.number()?;
    let maxval = cur.number()?;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval} outside 1..=65535")));
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("missing raster separator".into()));
    }
    let data = &bytes[cur.pos + 1..];
    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("image too large".into()))?;
    if data.len() < n * bytes_per_sample {
        return Err(Error::Format(format!(
            "truncated raster: {} bytes, need {}",
            data.len(),
            n * bytes_per_sample
        )));
    }
    if data.len() > n * bytes_per_sample {
        // a second frame or a multi-sample raster; only single-channel is supported
        return Err(Error::Format("trailing data after single-channel raster".into()));
    }
    let max = maxval as f64;
    let mut pixels = Vec::with_capacity(n);
    for i in 0..n {
        let v = if bytes_per_sample == 2 {
            u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as usize
        } else {
            data[i] as usize
        };
        if v > maxval {
            return Err(Error::Format(format!("sample {v} exceeds maxval {maxval}")));
        }
        pixels.push(v as f64 / max);
    }
    GrayImage::new(width, height, pixels, 1.0)
}

pub fn encode_pgm8(width: usize, height: usize, samples: &[u8]) -> Vec<u8> {
    debug_assert_eq!(samples.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}

pub(crate) fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes `bytes` through a temporary file in the target directory and
/// renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// P5 graymap, 0 for background and 255 for foreground.
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let samples: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_atomic(path.as_ref(), &encode_pgm8(mask.width(), mask.height(), &samples))
}

/// Reads a mask written by [`write_mask`] (or any graymap), thresholding at 0.5.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    Ok(BinaryMask::threshold(&read_gray_image(path)?, 0.5))
}

/// 8-bit P5 graymap, intensities rounded to the nearest of 256 levels.
pub fn write_gray_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let samples: Vec<u8> = img.pixels().iter().map(|&v| quantize(v)).collect();
    write_atomic(path.as_ref(), &encode_pgm8(img.width(), img.height(), &samples))
}

pub fn write_gray_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let samples: Vec<u8> = img.pixels().iter().map(|&v| quantize(v)).collect();
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, samples)
        .ok_or_else(|| Error::Format("raster size mismatch".into()))?;
    let mut bytes = Vec::new();
    buf.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn contour_csv(contour: &Contour) -> String {
    let mut out = String::from("x,y\n");
    for p in contour.points() {
        out.push_str(&format!("{},{}\n", p.x, p.y));
    }
    out
}

/// One `x,y` line per point after an `x,y` header.
pub fn write_contour_csv(contour: &Contour, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), contour_csv(contour).as_bytes())
}
