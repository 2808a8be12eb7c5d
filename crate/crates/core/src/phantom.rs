//! Synthetic IVOCT-like frames with exact lumen ground truth.
//!
//! A dark lumen (disk or ellipse) sits inside a bright wall ring on a
//! mid-gray background. Multiplicative Gaussian speckle, a guide-wire shadow
//! wedge and a bright catheter disk are optional.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage};

/// Frames in the standard acceptance suite.
pub const DEFAULT_SUITE_SIZE: usize = 138;

/// Intensity inside the guide-wire shadow.
pub const SHADOW_INTENSITY: f64 = 0.1;
pub const CATHETER_INTENSITY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LumenShape {
    Circle(f64),
    Ellipse { rx: f64, ry: f64, angle_deg: f64 },
}

impl LumenShape {
    fn max_radius(&self) -> f64 {
        match *self {
            LumenShape::Circle(r) => r,
            LumenShape::Ellipse { rx, ry, .. } => rx.max(ry),
        }
    }

    /// Whether the offset `(dx, dy)` from the lumen center lies inside the
    /// shape grown by `grow` pixels.
    fn contains(&self, dx: f64, dy: f64, grow: f64) -> bool {
        match *self {
            LumenShape::Circle(r) => dx * dx + dy * dy <= (r + grow) * (r + grow),
            LumenShape::Ellipse { rx, ry, angle_deg } => {
                let (s, c) = angle_deg.to_radians().sin_cos();
                let u = dx * c + dy * s;
                let v = -dx * s + dy * c;
                let (a, b) = (rx + grow, ry + grow);
                (u / a).powi(2) + (v / b).powi(2) <= 1.0
            }
        }
    }

    fn grown(&self, by: f64) -> Self {
        match *self {
            LumenShape::Circle(r) => LumenShape::Circle(r + by),
            LumenShape::Ellipse { rx, ry, angle_deg } => LumenShape::Ellipse {
                rx: rx + by,
                ry: ry + by,
                angle_deg,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhantomSpec {
    pub size: usize,
    pub lumen_cx: f64,
    pub lumen_cy: f64,
    pub lumen_r: LumenShape,
    pub lumen_intensity: f64,
    pub wall_thickness_px: usize,
    pub wall_intensity: f64,
    pub background_intensity: f64,
    pub speckle_sigma: f64,
    pub guidewire_angle_deg: Option<f64>,
    pub guidewire_width_deg: Option<f64>,
    pub catheter_r_px: Option<f64>,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            size: 256,
            lumen_cx: 128.0,
            lumen_cy: 128.0,
            lumen_r: LumenShape::Circle(50.0),
            lumen_intensity: 0.05,
            wall_thickness_px: 20,
            wall_intensity: 0.8,
            background_intensity: 0.3,
            speckle_sigma: 0.15,
            guidewire_angle_deg: None,
            guidewire_width_deg: None,
            catheter_r_px: None,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::InvalidParameter("size must be >= 1".into()));
        }
        let radii_ok = match self.lumen_r {
            LumenShape::Circle(r) => r > 0.0,
            LumenShape::Ellipse { rx, ry, angle_deg } => rx > 0.0 && ry > 0.0 && angle_deg.is_finite(),
        };
        if !radii_ok {
            return Err(Error::InvalidParameter(format!("bad lumen radius {:?}", self.lumen_r)));
        }
        for (name, v) in [
            ("lumen_intensity", self.lumen_intensity),
            ("wall_intensity", self.wall_intensity),
            ("background_intensity", self.background_intensity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} {v} outside [0, 1]")));
            }
        }
        if !(self.speckle_sigma >= 0.0 && self.speckle_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "speckle_sigma must be >= 0, got {}",
                self.speckle_sigma
            )));
        }
        if self.guidewire_angle_deg.is_some() != self.guidewire_width_deg.is_some() {
            return Err(Error::InvalidParameter(
                "guide-wire angle and width must be given together".into(),
            ));
        }
        let extent = self.lumen_r.max_radius() + self.wall_thickness_px as f64;
        let hi = (self.size - 1) as f64;
        for (axis, c) in [("x", self.lumen_cx), ("y", self.lumen_cy)] {
            if !(c - extent >= 0.0 && c + extent <= hi) {
                return Err(Error::Geometry(format!(
                    "lumen plus wall spans {axis} {:.1}..{:.1}, frame is 0..{hi}",
                    c - extent,
                    c + extent
                )));
            }
        }
        Ok(())
    }

    fn in_shadow(&self, dx: f64, dy: f64) -> bool {
        let (Some(angle), Some(width)) = (self.guidewire_angle_deg, self.guidewire_width_deg) else {
            return false;
        };
        let theta = dy.atan2(dx).to_degrees();
        let diff = (theta - angle).rem_euclid(360.0);
        diff.min(360.0 - diff) <= width / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub image: GrayImage,
    pub mask: BinaryMask,
    pub spec: PhantomSpec,
}

pub fn generate(spec: &PhantomSpec) -> Result<(GrayImage, BinaryMask)> {
    spec.validate()?;
    let n = spec.size;
    let wall = spec.wall_thickness_px as f64;
    let mask = BinaryMask::from_fn(n, n, |x, y| {
        spec.lumen_r
            .contains(x as f64 - spec.lumen_cx, y as f64 - spec.lumen_cy, 0.0)
    });

    let mut pixels = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let (dx, dy) = (x as f64 - spec.lumen_cx, y as f64 - spec.lumen_cy);
            let mut v = if mask.get(x, y) {
                spec.lumen_intensity
            } else if spec.lumen_r.contains(dx, dy, wall) {
                spec.wall_intensity
            } else {
                spec.background_intensity
            };
            if !mask.get(x, y) && spec.in_shadow(dx, dy) {
                v = SHADOW_INTENSITY;
            }
            if let Some(r) = spec.catheter_r_px {
                if dx * dx + dy * dy <= r * r {
                    v = CATHETER_INTENSITY;
                }
            }
            pixels.push(v);
        }
    }

    if spec.speckle_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let noise = Normal::new(0.0, spec.speckle_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for v in &mut pixels {
            *v = (*v * (1.0 + noise.sample(&mut rng))).clamp(0.0, 1.0);
        }
    }

    Ok((GrayImage::new(n, n, pixels, 1.0)?, mask))
}

/// Half-widths of the uniform jitter applied per suite member.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Jitter {
    pub center_px: f64,
    pub radius_px: f64,
    pub speckle: f64,
}

impl Jitter {
    /// Jitter of the standard suite: center and radius each within 10 px.
    pub fn standard() -> Self {
        Self {
            center_px: 10.0,
            radius_px: 10.0,
            speckle: 0.0,
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.random_range(-half_width..=half_width)
    } else {
        0.0
    }
}

/// `n` phantoms around `base`. Member `k` uses seed `base.seed + k`; with zero
/// jitter member 0 equals `base`.
pub fn generate_suite(n: usize, base: &PhantomSpec, jitter: &Jitter) -> Result<Vec<Phantom>> {
    if n == 0 {
        return Err(Error::InvalidParameter("suite size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(base.seed ^ 0x5eed_5eed_5eed_5eed);
    let mut specs = Vec::with_capacity(n);
    for k in 0..n {
        let mut spec = base.clone();
        spec.seed = base.seed.wrapping_add(k as u64);
        spec.lumen_cx += draw(&mut rng, jitter.center_px);
        spec.lumen_cy += draw(&mut rng, jitter.center_px);
        spec.lumen_r = spec.lumen_r.grown(draw(&mut rng, jitter.radius_px));
        spec.speckle_sigma = (spec.speckle_sigma + draw(&mut rng, jitter.speckle)).max(0.0);
        specs.push(spec);
    }
    specs
        .into_iter()
        .map(|spec| {
            let (image, mask) = generate(&spec)?;
            Ok(Phantom { image, mask, spec })
        })
        .collect()
}

/// The standard 138-frame suite at the given speckle level.
pub fn default_suite(speckle_sigma: f64, seed: u64) -> Result<Vec<Phantom>> {
    let base = PhantomSpec {
        speckle_sigma,
        seed,
        ..PhantomSpec::default()
    };
    generate_suite(DEFAULT_SUITE_SIZE, &base, &Jitter::standard())
}
