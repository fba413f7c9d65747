//! Ground-truth phantoms rasterized by pixel-centre sampling.
//!
//! Ellipse parameters use normalized coordinates where the image spans
//! `[-1, 1]` on both axes (`y` up).

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::rng::Stream;

pub const MIN_SHEPP_LOGAN_SIDE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    SheppLogan,
    RandomEllipses,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub seed: u64,
    pub n_ellipses: usize,
    pub side_px: usize,
}

impl PhantomSpec {
    pub fn random_ellipses(seed: u64, side_px: usize) -> Self {
        PhantomSpec {
            kind: PhantomKind::RandomEllipses,
            seed,
            n_ellipses: 8,
            side_px,
        }
    }

    pub fn generate(&self) -> Result<ImageGrid> {
        match self.kind {
            PhantomKind::SheppLogan => make_shepp_logan(self.side_px),
            PhantomKind::RandomEllipses => make_random_ellipses(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub intensity: f64,
    pub semi_x: f64,
    pub semi_y: f64,
    pub center_x: f64,
    pub center_y: f64,
    /// Counter-clockwise rotation of the `semi_x` axis.
    pub angle_rad: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = libm::sincos(self.angle_rad);
        let dx = x - self.center_x;
        let dy = y - self.center_y;
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.semi_x) * (u / self.semi_x) + (v / self.semi_y) * (v / self.semi_y) <= 1.0
    }
}

const fn deg(d: f64) -> f64 {
    d * PI / 180.0
}

/// Ten-ellipse head phantom with the contrast-enhanced intensities of Toft,
/// which keeps every value inside `[0, 1]`.
pub const SHEPP_LOGAN: [Ellipse; 10] = [
    e(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    e(-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    e(-0.2, 0.11, 0.31, 0.22, 0.0, deg(-18.0)),
    e(-0.2, 0.16, 0.41, -0.22, 0.0, deg(18.0)),
    e(0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    e(0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    e(0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    e(0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    e(0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    e(0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

const fn e(intensity: f64, semi_x: f64, semi_y: f64, cx: f64, cy: f64, angle: f64) -> Ellipse {
    Ellipse {
        intensity,
        semi_x,
        semi_y,
        center_x: cx,
        center_y: cy,
        angle_rad: angle,
    }
}

/// Sum ellipse intensities at every pixel centre, then clamp to `[0, 1]`.
pub fn rasterize(ellipses: &[Ellipse], side_px: usize) -> ImageGrid {
    let half = side_px as f64 / 2.0;
    let mut values = Vec::with_capacity(side_px * side_px);
    for row in 0..side_px {
        let y = (half - row as f64 - 0.5) / half;
        for col in 0..side_px {
            let x = (col as f64 + 0.5 - half) / half;
            let v: f64 = ellipses
                .iter()
                .filter(|el| el.contains(x, y))
                .map(|el| el.intensity)
                .sum();
            values.push(v.clamp(0.0, 1.0));
        }
    }
    ImageGrid::from_values(side_px, 1.0, values).expect("rasterized grid is well formed")
}

pub fn make_shepp_logan(side_px: usize) -> Result<ImageGrid> {
    if side_px < MIN_SHEPP_LOGAN_SIDE {
        return Err(Error::invalid("Shepp-Logan phantom needs side_px >= 16"));
    }
    Ok(rasterize(&SHEPP_LOGAN, side_px))
}

/// Ellipses drawn for a random phantom: centres uniform in the disk of
/// radius 0.8, semi-axes in `[0.05, 0.3]`, rotation in `[0, pi)` and
/// additive intensity in `[0.2, 0.8]`.
pub fn random_ellipse_set(seed: u64, n_ellipses: usize) -> Vec<Ellipse> {
    let mut rng = Stream::new(seed, 0);
    (0..n_ellipses)
        .map(|_| {
            let r = 0.8 * libm::sqrt(rng.uniform());
            let t = 2.0 * PI * rng.uniform();
            let (s, c) = libm::sincos(t);
            Ellipse {
                center_x: r * c,
                center_y: r * s,
                semi_x: rng.uniform_in(0.05, 0.3),
                semi_y: rng.uniform_in(0.05, 0.3),
                angle_rad: PI * rng.uniform(),
                intensity: rng.uniform_in(0.2, 0.8),
            }
        })
        .collect()
}

pub fn make_random_ellipses(spec: &PhantomSpec) -> Result<ImageGrid> {
    if spec.kind != PhantomKind::RandomEllipses {
        return Err(Error::invalid("phantom spec kind must be RandomEllipses"));
    }
    if spec.n_ellipses == 0 || spec.side_px == 0 {
        return Err(Error::invalid("n_ellipses and side_px must be positive"));
    }
    Ok(rasterize(
        &random_ellipse_set(spec.seed, spec.n_ellipses),
        spec.side_px,
    ))
}

/// Centred uniform disk, `radius_px` in pixels. Each pixel holds `value`
/// times its covered area fraction, estimated on an 8x8 sub-pixel lattice.
pub fn make_disk(side_px: usize, radius_px: f64, value: f64) -> ImageGrid {
    const SUB: usize = 8;
    let mut img = ImageGrid::zeros(side_px, 1.0);
    let half = side_px as f64 / 2.0;
    let r2 = radius_px * radius_px;
    for row in 0..side_px {
        for col in 0..side_px {
            let mut inside = 0usize;
            for sr in 0..SUB {
                let y = half - row as f64 - (sr as f64 + 0.5) / SUB as f64;
                for sc in 0..SUB {
                    let x = col as f64 + (sc as f64 + 0.5) / SUB as f64 - half;
                    if x * x + y * y <= r2 {
                        inside += 1;
                    }
                }
            }
            img.values_mut()[row * side_px + col] = value * inside as f64 / (SUB * SUB) as f64;
        }
    }
    img
}
