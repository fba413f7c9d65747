//! Parallel-beam Radon transform (Joseph's method) and its exact adjoint.
//!
//! Ray `(theta, s)` is the line `x cos(theta) + y sin(theta) = s`. The ray is
//! marched one pixel row (or column) at a time along the axis most parallel
//! to it, linearly interpolating between the two nearest pixels of that row.
//! Each sample is weighted by the path length `h / max(|cos|, |sin|)`.
//! The adjoint reuses the same weights transposed, so `<Ax, y> = <x, A^T y>`
//! holds to rounding.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{ImageGrid, ScanGeometry};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    geometry: ScanGeometry,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(geometry: ScanGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.n_rays() {
            return Err(Error::invalid("sinogram length must be n_angles * n_det"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sinogram values must be finite"));
        }
        Ok(Sinogram { geometry, values })
    }

    pub fn zeros(geometry: ScanGeometry) -> Self {
        let n = geometry.n_rays();
        Sinogram {
            geometry,
            values: vec![0.0; n],
        }
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geometry
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

    /// Detector row recorded at angle index `a`.
    pub fn row(&self, a: usize) -> &[f64] {
        let n = self.geometry.n_det();
        &self.values[a * n..(a + 1) * n]
    }
}

/// Forward/adjoint pair for one geometry and grid size, stored as a sparse
/// ray-by-pixel matrix (CSR). The reconstruction grid uses the detector
/// spacing as its pixel size unless built with [`Projector::with_pixel_size`].
#[derive(Debug, Clone)]
pub struct Projector {
    geometry: ScanGeometry,
    side: usize,
    pixel: f64,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
}

impl Projector {
    pub fn new(geometry: &ScanGeometry, side_px: usize) -> Result<Self> {
        Self::with_pixel_size(geometry, side_px, geometry.det_spacing())
    }

    pub fn with_pixel_size(geometry: &ScanGeometry, side_px: usize, pixel: f64) -> Result<Self> {
        if side_px == 0 {
            return Err(Error::invalid("side_px must be positive"));
        }
        if side_px
            .checked_mul(side_px)
            .is_none_or(|n| n > u32::MAX as usize)
        {
            return Err(Error::invalid("grid too large"));
        }
        geometry.check_covers(side_px, pixel)?;
        let n_rays = geometry.n_rays();
        let mut row_start = Vec::with_capacity(n_rays + 1);
        let mut cols = Vec::with_capacity(n_rays * 2 * side_px);
        let mut weights = Vec::with_capacity(n_rays * 2 * side_px);
        row_start.push(0);
        for &theta in geometry.angles_rad() {
            let (s, c) = libm::sincos(theta);
            for bin in 0..geometry.n_det() {
                ray_samples(side_px, pixel, c, s, geometry.bin_offset(bin), |p, w| {
                    if w != 0.0 {
                        cols.push(p as u32);
                        weights.push(w);
                    }
                });
                row_start.push(cols.len());
            }
        }
        Ok(Projector {
            geometry: geometry.clone(),
            side: side_px,
            pixel,
            row_start,
            cols,
            weights,
        })
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geometry
    }

    pub fn side_px(&self) -> usize {
        self.side
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel
    }

    pub fn n_pixels(&self) -> usize {
        self.side * self.side
    }

    pub fn n_rays(&self) -> usize {
        self.geometry.n_rays()
    }

    /// `(pixel, weight)` pairs of one ray.
    pub fn ray(&self, ray: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_start[ray]..self.row_start[ray + 1];
        self.cols[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&p, &w)| (p as usize, w))
    }

    /// `out = A x`.
    pub fn forward_into(&self, image: &[f64], out: &mut [f64]) {
        assert_eq!(image.len(), self.n_pixels());
        assert_eq!(out.len(), self.n_rays());
        for (ray, o) in out.iter_mut().enumerate() {
            let range = self.row_start[ray]..self.row_start[ray + 1];
            *o = self.cols[range.clone()]
                .iter()
                .zip(&self.weights[range])
                .map(|(&p, &w)| w * image[p as usize])
                .sum();
        }
    }

    /// `out = A^T y`, accumulated ray by ray in a fixed order.
    pub fn adjoint_into(&self, sino: &[f64], out: &mut [f64]) {
        assert_eq!(sino.len(), self.n_rays());
        assert_eq!(out.len(), self.n_pixels());
        out.iter_mut().for_each(|v| *v = 0.0);
        for (ray, &y) in sino.iter().enumerate() {
            if y == 0.0 {
                continue;
            }
            let range = self.row_start[ray]..self.row_start[ray + 1];
            for (&p, &w) in self.cols[range.clone()].iter().zip(&self.weights[range]) {
                out[p as usize] += w * y;
            }
        }
    }

    pub fn forward(&self, image: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rays()];
        self.forward_into(image, &mut out);
        out
    }

    pub fn adjoint(&self, sino: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_pixels()];
        self.adjoint_into(sino, &mut out);
        out
    }

    /// Power iteration on `A^T A`; returns `sqrt` of the final Rayleigh
    /// quotient, which is nondecreasing in the number of iterations.
    pub fn operator_norm(&self, iters: usize) -> f64 {
        let mut rng = Stream::new(0x6f70_6e6f_726d, 0);
        let mut x: Vec<f64> = (0..self.n_pixels()).map(|_| 0.5 + rng.uniform()).collect();
        let mut ax = vec![0.0; self.n_rays()];
        let mut estimate = 0.0;
        for _ in 0..iters {
            let norm = l2(&x);
            if norm == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= norm);
            self.forward_into(&x, &mut ax);
            estimate = dot(&ax, &ax);
            self.adjoint_into(&ax, &mut x);
        }
        libm::sqrt(estimate)
    }
}

/// Joseph samples of the ray `x cos + y sin = offset` on an `n x n` grid
/// with pixel size `h`.
fn ray_samples(n: usize, h: f64, c: f64, s: f64, offset: f64, mut visit: impl FnMut(usize, f64)) {
    let half = n as f64 / 2.0;
    if c.abs() >= s.abs() {
        // march over rows; x = (offset - y sin) / cos
        let w = h / c.abs();
        for row in 0..n {
            let y = (half - row as f64 - 0.5) * h;
            let x = (offset - y * s) / c;
            let u = x / h + half - 0.5;
            let base = libm::floor(u);
            let f = u - base;
            let col = base as isize;
            if col >= 0 && (col as usize) < n {
                visit(row * n + col as usize, w * (1.0 - f));
            }
            if col + 1 >= 0 && ((col + 1) as usize) < n {
                visit(row * n + (col + 1) as usize, w * f);
            }
        }
    } else {
        // march over columns; y = (offset - x cos) / sin
        let w = h / s.abs();
        for col in 0..n {
            let x = (col as f64 + 0.5 - half) * h;
            let y = (offset - x * c) / s;
            let v = half - 0.5 - y / h;
            let base = libm::floor(v);
            let f = v - base;
            let row = base as isize;
            if row >= 0 && (row as usize) < n {
                visit(row as usize * n + col, w * (1.0 - f));
            }
            if row + 1 >= 0 && ((row + 1) as usize) < n {
                visit((row + 1) as usize * n + col, w * f);
            }
        }
    }
}

pub fn forward_project(image: &ImageGrid, geom: &ScanGeometry) -> Result<Sinogram> {
    let proj = Projector::with_pixel_size(geom, image.side_px(), image.pixel_size())?;
    Ok(Sinogram {
        geometry: geom.clone(),
        values: proj.forward(image.values()),
    })
}

/// Exact algebraic adjoint of [`forward_project`] onto a `side_px` grid whose
/// pixel size equals the detector spacing.
pub fn back_project(sino: &Sinogram, side_px: usize) -> Result<ImageGrid> {
    let proj = Projector::new(sino.geometry(), side_px)?;
    ImageGrid::from_values(side_px, proj.pixel_size(), proj.adjoint(sino.values()))
}

pub fn estimate_operator_norm(geom: &ScanGeometry, side_px: usize, iters: usize) -> Result<f64> {
    if iters < 10 {
        return Err(Error::invalid(
            "power iteration needs at least 10 iterations",
        ));
    }
    Ok(Projector::new(geom, side_px)?.operator_norm(iters))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::derive_geometry;
    use crate::phantom::make_disk;

    fn random_vec(seed: u64, n: usize) -> Vec<f64> {
        let mut s = Stream::new(seed, 1);
        (0..n).map(|_| s.uniform_in(-1.0, 1.0)).collect()
    }

    #[test]
    fn zero_in_zero_out() {
        let img = ImageGrid::zeros(32, 1.0);
        let g = derive_geometry(&img, 8).unwrap();
        let s = forward_project(&img, &g).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
        let b = back_project(&s, 32).unwrap();
        assert!(b.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_image_straight_through() {
        let mut img = ImageGrid::zeros(128, 1.0);
        img.values_mut().iter_mut().for_each(|v| *v = 1.0);
        let g = derive_geometry(&img, 32).unwrap();
        let s = forward_project(&img, &g).unwrap();
        let central = s.row(0)[g.n_det() / 2];
        assert!((central - 128.0).abs() / 128.0 < 0.005, "{central}");
    }

    #[test]
    fn adjoint_dot_test_small() {
        let img = ImageGrid::zeros(24, 0.7);
        let g = derive_geometry(&img, 7).unwrap();
        let p = Projector::new(&g, 24).unwrap();
        for seed in 0..5 {
            let x = random_vec(seed, p.n_pixels());
            let y = random_vec(seed + 100, p.n_rays());
            let ax = p.forward(&x);
            let aty = p.adjoint(&y);
            let err = (dot(&ax, &y) - dot(&x, &aty)).abs() / (l2(&ax) * l2(&y));
            assert!(err < 1e-12, "{err}");
        }
    }

    #[test]
    fn single_ray_footprint() {
        let img = ImageGrid::zeros(32, 1.0);
        let g = derive_geometry(&img, 5).unwrap();
        let p = Projector::new(&g, 32).unwrap();
        let mut y = vec![0.0; p.n_rays()];
        let ray = 2 * g.n_det() + 20;
        y[ray] = 1.0;
        let back = p.adjoint(&y);
        let mut touched = vec![false; p.n_pixels()];
        for (i, _) in p.ray(ray) {
            touched[i] = true;
        }
        for (i, v) in back.iter().enumerate() {
            if !touched[i] {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(back.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn coverage_is_enforced() {
        let g = ScanGeometry::full_angle(4, 10, 1.0).unwrap();
        assert!(Projector::new(&g, 32).is_err());
        let s = Sinogram::zeros(g);
        assert!(back_project(&s, 32).is_err());
    }

    #[test]
    fn nonnegative_image_projects_nonnegative() {
        let d = make_disk(64, 20.0, 0.3);
        let g = derive_geometry(&d, 9).unwrap();
        let s = forward_project(&d, &g).unwrap();
        assert!(s.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn operator_norm_too_few_iterations() {
        let img = ImageGrid::zeros(16, 1.0);
        let g = derive_geometry(&img, 4).unwrap();
        assert!(estimate_operator_norm(&g, 16, 9).is_err());
        assert!(estimate_operator_norm(&g, 16, 10).unwrap() > 0.0);
    }
}
