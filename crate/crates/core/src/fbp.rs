//! Filtered back-projection.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fft::{bin_frequency, Fft};
use crate::grid::{ImageGrid, ScanGeometry};
use crate::noise::{log_transform, PhotonMeasurement, DEFAULT_FLOOR_COUNTS};
use crate::projector::Sinogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    RamLak,
    Hann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FbpConfig {
    pub window: Window,
    pub pad_factor: usize,
    pub clamp_negative: bool,
}

impl Default for FbpConfig {
    fn default() -> Self {
        FbpConfig {
            window: Window::RamLak,
            pad_factor: 2,
            clamp_negative: true,
        }
    }
}

impl FbpConfig {
    pub fn pad_len(&self, n_det: usize) -> usize {
        (self.pad_factor.max(2) * n_det).next_power_of_two()
    }
}

/// Frequency response of the band-limited ramp, built as the transform of
/// the discrete Ram–Lak kernel (`1/4` at the origin, `-1/(pi k)^2` at odd
/// offsets) with the DC bin forced to zero.
#[derive(Debug, Clone)]
pub struct RampFilter {
    n_det: usize,
    fft: Fft,
    response: Vec<f64>,
}

impl RampFilter {
    pub fn new(n_det: usize, det_spacing: f64, cfg: &FbpConfig) -> Self {
        let pad = cfg.pad_len(n_det);
        let fft = Fft::new(pad);
        let mut kernel = vec![Complex64::new(0.0, 0.0); pad];
        kernel[0] = Complex64::new(0.25, 0.0);
        for k in (1..pad / 2).step_by(2) {
            let v = -1.0 / (PI * PI * (k * k) as f64);
            kernel[k] = Complex64::new(v, 0.0);
            kernel[pad - k] = Complex64::new(v, 0.0);
        }
        fft.forward(&mut kernel);
        let response = kernel
            .iter()
            .enumerate()
            .map(|(k, h)| {
                if k == 0 {
                    return 0.0;
                }
                let w = match cfg.window {
                    Window::RamLak => 1.0,
                    Window::Hann => 0.5 * (1.0 + libm::cos(bin_frequency(k, pad))),
                };
                h.re * w / det_spacing
            })
            .collect();
        RampFilter {
            n_det,
            fft,
            response,
        }
    }

    pub fn pad_len(&self) -> usize {
        self.fft.len()
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// Filter one detector row in place (zero-padded to the pad length).
    pub fn filter_row(&self, row: &mut [f64]) {
        assert_eq!(row.len(), self.n_det);
        let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(self.pad_len(), Complex64::new(0.0, 0.0));
        self.apply_periodic(&mut buf);
        for (out, v) in row.iter_mut().zip(&buf) {
            *out = v.re;
        }
    }

    /// Circular filtering of a full pad-length period.
    pub fn apply_periodic(&self, buf: &mut [Complex64]) {
        self.fft.forward(buf);
        for (v, &h) in buf.iter_mut().zip(&self.response) {
            *v *= h;
        }
        self.fft.inverse(buf);
    }
}

pub fn ramp_filter(sino: &Sinogram, cfg: &FbpConfig) -> Sinogram {
    let g = sino.geometry();
    let filter = RampFilter::new(g.n_det(), g.det_spacing(), cfg);
    let mut out = sino.clone();
    for row in out.values_mut().chunks_exact_mut(g.n_det()) {
        filter.filter_row(row);
    }
    out
}

/// Pixel-driven backprojection with linear detector interpolation, scaled
/// by `pi / n_angles` (the angular quadrature weight).
pub fn pixel_backproject(filtered: &Sinogram, side_px: usize) -> Result<ImageGrid> {
    let g: &ScanGeometry = filtered.geometry();
    let h = g.det_spacing();
    g.check_covers(side_px, h)?;
    let n_det = g.n_det();
    let trig: Vec<(f64, f64)> = g
        .angles_rad()
        .iter()
        .map(|&t| {
            let (s, c) = libm::sincos(t);
            (c, s)
        })
        .collect();
    let mut img = ImageGrid::zeros(side_px, h);
    let half = side_px as f64 / 2.0;
    let det_half = n_det as f64 / 2.0;
    let scale = PI / g.n_angles() as f64;
    for row in 0..side_px {
        let y = (half - row as f64 - 0.5) * h;
        for col in 0..side_px {
            let x = (col as f64 + 0.5 - half) * h;
            let mut acc = 0.0;
            for (a, &(c, s)) in trig.iter().enumerate() {
                let u = (x * c + y * s) / h + det_half - 0.5;
                let base = libm::floor(u);
                let f = u - base;
                let k = base as isize;
                let line = filtered.row(a);
                if k >= 0 && (k as usize) < n_det {
                    acc += (1.0 - f) * line[k as usize];
                }
                if k + 1 >= 0 && ((k + 1) as usize) < n_det {
                    acc += f * line[(k + 1) as usize];
                }
            }
            img.values_mut()[row * side_px + col] = acc * scale;
        }
    }
    Ok(img)
}

/// FBP on line integrals that are already known (no count data).
pub fn fbp_from_sinogram(sino: &Sinogram, cfg: &FbpConfig, side_px: usize) -> Result<ImageGrid> {
    sino.geometry()
        .check_covers(side_px, sino.geometry().det_spacing())?;
    let mut img = pixel_backproject(&ramp_filter(sino, cfg), side_px)?;
    if cfg.clamp_negative {
        img.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    }
    Ok(img)
}

pub fn fbp_reconstruct(
    meas: &PhotonMeasurement,
    cfg: &FbpConfig,
    side_px: usize,
) -> Result<ImageGrid> {
    let sino = log_transform(meas, DEFAULT_FLOOR_COUNTS)?;
    fbp_from_sinogram(&sino, cfg, side_px)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::derive_geometry;
    use crate::phantom::make_disk;
    use crate::projector::forward_project;

    fn geometry(n_det: usize) -> ScanGeometry {
        ScanGeometry::full_angle(1, n_det, 1.0).unwrap()
    }

    #[test]
    fn pad_length() {
        let cfg = FbpConfig::default();
        assert_eq!(cfg.pad_len(182), 512);
        assert_eq!(cfg.pad_len(128), 256);
        let cfg4 = FbpConfig {
            pad_factor: 4,
            ..cfg
        };
        assert_eq!(cfg4.pad_len(182), 1024);
    }

    #[test]
    fn response_rejects_dc() {
        let f = RampFilter::new(182, 1.0, &FbpConfig::default());
        assert_eq!(f.response()[0], 0.0);
        // a constant over the whole period is annihilated
        let mut buf = vec![Complex64::new(3.5, 0.0); f.pad_len()];
        f.apply_periodic(&mut buf);
        assert!(buf.iter().all(|v| v.norm() < 1e-8 * 3.5));
    }

    #[test]
    fn impulse_matches_ram_lak_kernel() {
        let n = 182;
        let mut row = vec![0.0; n];
        row[90] = 1.0;
        let sino = Sinogram::new(geometry(n), row).unwrap();
        let out = ramp_filter(&sino, &FbpConfig::default());
        for (j, &v) in out.values().iter().enumerate() {
            let k = (j as isize - 90).unsigned_abs();
            let want = if k == 0 {
                0.25
            } else if k % 2 == 1 {
                -1.0 / (PI * PI * (k * k) as f64)
            } else {
                0.0
            };
            assert!((v - want).abs() < 1e-6, "offset {k}: {v} vs {want}");
        }
    }

    #[test]
    fn kernel_scales_with_bin_width() {
        let n = 64;
        let mut row = vec![0.0; n];
        row[30] = 1.0;
        let g = ScanGeometry::full_angle(1, n, 0.5).unwrap();
        let out = ramp_filter(&Sinogram::new(g, row).unwrap(), &FbpConfig::default());
        assert!((out.values()[30] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn filter_is_linear() {
        let n = 50;
        let a: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos() + 0.2).collect();
        let cfg = FbpConfig {
            window: Window::Hann,
            ..FbpConfig::default()
        };
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
        let fa = ramp_filter(&Sinogram::new(geometry(n), a).unwrap(), &cfg);
        let fb = ramp_filter(&Sinogram::new(geometry(n), b).unwrap(), &cfg);
        let fm = ramp_filter(&Sinogram::new(geometry(n), mix).unwrap(), &cfg);
        for i in 0..n {
            let want = 2.0 * fa.values()[i] - 0.5 * fb.values()[i];
            assert!((fm.values()[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_amplitude_is_recovered() {
        let mu = 0.02;
        let disk = make_disk(128, 30.0, mu);
        let g = derive_geometry(&disk, 180).unwrap();
        let s = forward_project(&disk, &g).unwrap();
        let rec = fbp_from_sinogram(&s, &FbpConfig::default(), 128).unwrap();
        // mean over the inner disk of radius 20
        let mut sum = 0.0;
        let mut n = 0;
        for r in 0..128 {
            for c in 0..128 {
                let (x, y) = rec.pixel_center(r, c);
                if x * x + y * y < 400.0 {
                    sum += rec.get(r, c);
                    n += 1;
                }
            }
        }
        let mean = sum / n as f64;
        assert!((mean - mu).abs() / mu < 0.02, "{mean}");
    }

    #[test]
    fn clamped_output_nonnegative() {
        let disk = make_disk(64, 20.0, 0.05);
        let g = derive_geometry(&disk, 16).unwrap();
        let s = forward_project(&disk, &g).unwrap();
        let rec = fbp_from_sinogram(&s, &FbpConfig::default(), 64).unwrap();
        assert!(rec.is_nonnegative());
        let raw = fbp_from_sinogram(
            &s,
            &FbpConfig {
                clamp_negative: false,
                ..FbpConfig::default()
            },
            64,
        )
        .unwrap();
        assert!(raw.values().iter().any(|&v| v < 0.0));
    }
}
