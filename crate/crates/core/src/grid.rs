//! Image grids and parallel-beam scan geometry.
//!
//! Coordinates: the grid is centred on the origin, `x` grows with the column
//! index and `y` grows upward (decreasing row index). Pixel `(r, c)` has its
//! centre at `((c + 0.5 - n/2) h, (n/2 - r - 0.5) h)` with `h` the pixel size.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square attenuation map, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    side_px: usize,
    pixel_size: f64,
    values: Vec<f64>,
}

impl ImageGrid {
    pub fn zeros(side_px: usize, pixel_size: f64) -> Self {
        ImageGrid {
            side_px,
            pixel_size,
            values: vec![0.0; side_px * side_px],
        }
    }

    pub fn from_values(side_px: usize, pixel_size: f64, values: Vec<f64>) -> Result<Self> {
        if side_px == 0 {
            return Err(Error::invalid("side_px must be positive"));
        }
        if !(pixel_size > 0.0 && pixel_size.is_finite()) {
            return Err(Error::invalid("pixel_size must be positive and finite"));
        }
        if values.len() != side_px * side_px {
            return Err(Error::invalid(format!(
                "expected {} values for a {side_px}x{side_px} grid, got {}",
                side_px * side_px,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image values must be finite"));
        }
        Ok(ImageGrid {
            side_px,
            pixel_size,
            values,
        })
    }

    pub fn side_px(&self) -> usize {
        self.side_px
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.side_px + col]
    }

    pub fn same_shape(&self, other: &ImageGrid) -> bool {
        self.side_px == other.side_px
    }

    /// Same grid, new values. Panics if the length does not match.
    pub fn with_values(&self, values: Vec<f64>) -> ImageGrid {
        assert_eq!(values.len(), self.values.len());
        ImageGrid {
            side_px: self.side_px,
            pixel_size: self.pixel_size,
            values,
        }
    }

    /// Same values on a grid with a different pixel size.
    pub fn with_pixel_size(mut self, pixel_size: f64) -> Result<ImageGrid> {
        if !(pixel_size > 0.0 && pixel_size.is_finite()) {
            return Err(Error::invalid("pixel_size must be positive and finite"));
        }
        self.pixel_size = pixel_size;
        Ok(self)
    }

    /// Physical coordinate of a pixel centre.
    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        let half = self.side_px as f64 / 2.0;
        (
            (col as f64 + 0.5 - half) * self.pixel_size,
            (half - row as f64 - 0.5) * self.pixel_size,
        )
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }
}

/// Parallel-beam acquisition: projection angles and a flat detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGeometry {
    angles_rad: Vec<f64>,
    n_det: usize,
    det_spacing: f64,
}

impl ScanGeometry {
    pub fn new(angles_rad: Vec<f64>, n_det: usize, det_spacing: f64) -> Result<Self> {
        if angles_rad.is_empty() {
            return Err(Error::invalid("at least one projection angle is required"));
        }
        if n_det == 0 {
            return Err(Error::invalid("n_det must be positive"));
        }
        if !(det_spacing > 0.0 && det_spacing.is_finite()) {
            return Err(Error::invalid("det_spacing must be positive and finite"));
        }
        if angles_rad.iter().any(|a| !(0.0..PI).contains(a)) {
            return Err(Error::invalid("angles must lie in [0, pi)"));
        }
        if angles_rad.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("angles must be strictly increasing"));
        }
        Ok(ScanGeometry {
            angles_rad,
            n_det,
            det_spacing,
        })
    }

    /// Full-angle acquisition: `angles[k] = k*pi/n_angles`.
    pub fn full_angle(n_angles: usize, n_det: usize, det_spacing: f64) -> Result<Self> {
        if n_angles == 0 {
            return Err(Error::invalid("n_angles must be at least 1"));
        }
        let angles = (0..n_angles)
            .map(|k| k as f64 * PI / n_angles as f64)
            .collect();
        Self::new(angles, n_det, det_spacing)
    }

    pub fn n_angles(&self) -> usize {
        self.angles_rad.len()
    }

    pub fn angles_rad(&self) -> &[f64] {
        &self.angles_rad
    }

    pub fn n_det(&self) -> usize {
        self.n_det
    }

    pub fn det_spacing(&self) -> f64 {
        self.det_spacing
    }

    pub fn n_rays(&self) -> usize {
        self.n_det * self.angles_rad.len()
    }

    /// Signed offset of detector bin `k` from the rotation centre.
    pub fn bin_offset(&self, k: usize) -> f64 {
        (k as f64 + 0.5 - self.n_det as f64 / 2.0) * self.det_spacing
    }

    /// Whether the detector spans the diagonal of a `side_px` grid whose
    /// pixel size is `pixel_size`.
    pub fn covers(&self, side_px: usize, pixel_size: f64) -> bool {
        let extent = self.n_det as f64 * self.det_spacing;
        let diagonal = side_px as f64 * pixel_size * SQRT_2;
        extent >= diagonal * (1.0 - 1e-12)
    }

    pub(crate) fn check_covers(&self, side_px: usize, pixel_size: f64) -> Result<()> {
        if self.covers(side_px, pixel_size) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "detector extent {} does not cover the {side_px}px grid diagonal {}",
                self.n_det as f64 * self.det_spacing,
                side_px as f64 * pixel_size * SQRT_2
            )))
        }
    }
}

/// Full-angle geometry sized to cover the whole image: the detector count is
/// `ceil(side*sqrt(2))` rounded up to an even number and the bin spacing
/// equals the pixel size.
pub fn derive_geometry(image: &ImageGrid, n_angles: usize) -> Result<ScanGeometry> {
    let n_det = detector_count(image.side_px());
    ScanGeometry::full_angle(n_angles, n_det, image.pixel_size())
}

pub(crate) fn detector_count(side_px: usize) -> usize {
    let n = libm::ceil(side_px as f64 * SQRT_2) as usize;
    n + (n % 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_for_default_grid() {
        let img = ImageGrid::zeros(128, 1.0);
        let g = derive_geometry(&img, 32).unwrap();
        assert_eq!(g.n_angles(), 32);
        assert_eq!(g.n_det(), 182);
        assert_eq!(g.angles_rad()[0], 0.0);
        assert!((g.angles_rad()[31] - 31.0 * PI / 32.0).abs() < 1e-15);
        assert!(g.covers(128, 1.0));
    }

    #[test]
    fn single_angle_geometry() {
        let img = ImageGrid::zeros(128, 1.0);
        let g = derive_geometry(&img, 1).unwrap();
        assert_eq!(g.angles_rad(), &[0.0]);
    }

    #[test]
    fn detector_count_is_even() {
        for side in 1..300 {
            let n = detector_count(side);
            assert_eq!(n % 2, 0);
            assert!(n as f64 >= side as f64 * SQRT_2);
        }
    }

    #[test]
    fn zero_angles_rejected() {
        let img = ImageGrid::zeros(16, 1.0);
        assert!(derive_geometry(&img, 0).is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(ImageGrid::from_values(2, 1.0, vec![0.0; 3]).is_err());
        assert!(ImageGrid::from_values(1, 1.0, vec![f64::NAN]).is_err());
        assert!(ImageGrid::from_values(1, 0.0, vec![0.0]).is_err());
        assert!(ScanGeometry::new(vec![0.5, 0.5], 4, 1.0).is_err());
        assert!(ScanGeometry::new(vec![PI], 4, 1.0).is_err());
    }

    #[test]
    fn pixel_centres_are_symmetric() {
        let img = ImageGrid::zeros(4, 0.5);
        assert_eq!(img.pixel_center(0, 0), (-0.75, 0.75));
        assert_eq!(img.pixel_center(3, 3), (0.75, -0.75));
    }
}
