//! Windowed 2D scattering transform with Morlet-type wavelets.
//!
//! Filters live in the Fourier domain on the `side x side` torus. Each
//! wavelet is a periodized Gaussian bump centred at `xi_j (cos t, sin t)`
//! with radial width `sigma_j`, minus a scaled Gaussian envelope so the DC
//! response is exactly zero. Scales are dyadic (`xi_j = 3pi/4 / 2^j`,
//! `sigma_j = 2 / 2^j`) and the low-pass is a Gaussian of width
//! `2.4 / 2^J`. All filters are divided by the square root of the maximum
//! Littlewood–Paley sum, so that sum peaks at exactly 1.
//!
//! Coefficient layout (channel-major, each channel subsampled by `2^J` to a
//! `(side/2^J)^2` block in row-major order):
//!
//! 1. `S0 = x * phi`
//! 2. `S1[j][l] = |x * psi_{j,l}| * phi` for `j < J`, `l < L`
//! 3. `S2[j1][l1][j2][l2] = ||x * psi_{j1,l1}| * psi_{j2,l2}| * phi` for
//!    `j1 < j2 < J` (order 2 only), iterated `j1, l1, j2, l2`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{bin_frequency, Fft2};
use crate::grid::ImageGrid;

const XI0: f64 = 3.0 * PI / 4.0;
const SIGMA0: f64 = 2.0;
const SIGMA_PHI: f64 = 2.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScatteringConfig {
    pub j_scales: usize,
    pub n_orientations: usize,
    pub order: u8,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        ScatteringConfig {
            j_scales: 3,
            n_orientations: 6,
            order: 2,
        }
    }
}

impl ScatteringConfig {
    pub fn validate(&self, side: usize) -> Result<()> {
        if self.j_scales == 0 || self.n_orientations == 0 {
            return Err(Error::invalid(
                "j_scales and n_orientations must be positive",
            ));
        }
        if !(1..=2).contains(&self.order) {
            return Err(Error::invalid("scattering order must be 1 or 2"));
        }
        let window = 1usize << self.j_scales;
        if side < window || !side.is_multiple_of(window) {
            return Err(Error::invalid(alloc::format!(
                "image side {side} is not divisible by 2^J = {window}"
            )));
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        let (j, l) = (self.j_scales, self.n_orientations);
        let first = j * l;
        let second = if self.order == 2 {
            l * l * j * (j - 1) / 2
        } else {
            0
        };
        1 + first + second
    }

    /// Length of the coefficient vector for a `side x side` image.
    pub fn n_coeffs(&self, side: usize) -> usize {
        let m = side >> self.j_scales;
        self.n_channels() * m * m
    }
}

fn gaussian_periodized(side: usize, center: (f64, f64), sigma: f64) -> Vec<f64> {
    let two_pi = 2.0 * PI;
    let mut out = vec![0.0; side * side];
    for r in 0..side {
        let wy = bin_frequency(r, side);
        for c in 0..side {
            let wx = bin_frequency(c, side);
            let mut acc = 0.0;
            for a in -1i32..=1 {
                for b in -1i32..=1 {
                    let dx = wx + two_pi * a as f64 - center.0;
                    let dy = wy + two_pi * b as f64 - center.1;
                    acc += libm::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                }
            }
            out[r * side + c] = acc;
        }
    }
    out
}

/// Precomputed Fourier-domain filters for one image size and config.
#[derive(Debug, Clone)]
pub struct FilterBank {
    cfg: ScatteringConfig,
    side: usize,
    fft: Fft2,
    /// `psi[j * L + l]`
    psi: Vec<Vec<f64>>,
    phi: Vec<f64>,
}

impl FilterBank {
    pub fn new(side: usize, cfg: &ScatteringConfig) -> Result<Self> {
        cfg.validate(side)?;
        let (jn, ln) = (cfg.j_scales, cfg.n_orientations);
        let mut psi = Vec::with_capacity(jn * ln);
        for j in 0..jn {
            let scale = (1u64 << j) as f64;
            let xi = XI0 / scale;
            let sigma = SIGMA0 / scale;
            let envelope = gaussian_periodized(side, (0.0, 0.0), sigma);
            for l in 0..ln {
                let theta = PI * l as f64 / ln as f64;
                let (s, c) = libm::sincos(theta);
                let bump = gaussian_periodized(side, (xi * c, xi * s), sigma);
                let kappa = bump[0] / envelope[0];
                psi.push(
                    bump.iter()
                        .zip(&envelope)
                        .map(|(b, e)| b - kappa * e)
                        .collect::<Vec<f64>>(),
                );
            }
        }
        let phi_raw = gaussian_periodized(side, (0.0, 0.0), SIGMA_PHI / (1u64 << jn) as f64);
        let phi0 = phi_raw[0];
        let phi: Vec<f64> = phi_raw.iter().map(|v| v / phi0).collect();
        let mut bank = FilterBank {
            cfg: *cfg,
            side,
            fft: Fft2::new(side),
            psi,
            phi,
        };
        let peak = bank.littlewood_paley().into_iter().fold(0.0f64, f64::max);
        let norm = 1.0 / libm::sqrt(peak);
        bank.phi.iter_mut().for_each(|v| *v *= norm);
        for f in bank.psi.iter_mut() {
            f.iter_mut().for_each(|v| *v *= norm);
        }
        Ok(bank)
    }

    pub fn config(&self) -> &ScatteringConfig {
        &self.cfg
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// `|phi(w)|^2 + 1/2 sum_{j,l} (|psi(w)|^2 + |psi(-w)|^2)` on the full
    /// frequency grid (row-major, FFT bin order).
    pub fn littlewood_paley(&self) -> Vec<f64> {
        let n = self.side;
        let mut lp: Vec<f64> = self.phi.iter().map(|v| v * v).collect();
        for f in &self.psi {
            for r in 0..n {
                for c in 0..n {
                    let i = r * n + c;
                    let mirror = ((n - r) % n) * n + (n - c) % n;
                    lp[i] += 0.5 * (f[i] * f[i] + f[mirror] * f[mirror]);
                }
            }
        }
        lp
    }

    /// Minimum and maximum of the Littlewood–Paley sum over frequencies
    /// with `|w| <= pi`.
    pub fn littlewood_paley_bounds(&self) -> (f64, f64) {
        let n = self.side;
        let lp = self.littlewood_paley();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for r in 0..n {
            let wy = bin_frequency(r, n);
            for c in 0..n {
                let wx = bin_frequency(c, n);
                if wx * wx + wy * wy <= PI * PI {
                    lo = lo.min(lp[r * n + c]);
                    hi = hi.max(lp[r * n + c]);
                }
            }
        }
        (lo, hi)
    }

    fn filtered(&self, spectrum: &[Complex64], filter: &[f64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = spectrum.iter().zip(filter).map(|(s, f)| s * *f).collect();
        self.fft.inverse(&mut out);
        out
    }

    fn modulus_spectrum(&self, field: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = field
            .iter()
            .map(|v| Complex64::new(libm::sqrt(v.re * v.re + v.im * v.im), 0.0))
            .collect();
        self.fft.forward(&mut out);
        out
    }

    fn push_lowpass(&self, spectrum: &[Complex64], out: &mut Vec<f64>) {
        let field = self.filtered(spectrum, &self.phi);
        let step = 1usize << self.cfg.j_scales;
        for r in (0..self.side).step_by(step) {
            for c in (0..self.side).step_by(step) {
                out.push(field[r * self.side + c].re);
            }
        }
    }

    pub fn transform(&self, image: &ImageGrid) -> Result<Vec<f64>> {
        if image.side_px() != self.side {
            return Err(Error::invalid("image side does not match the filter bank"));
        }
        let (jn, ln) = (self.cfg.j_scales, self.cfg.n_orientations);
        let mut out = Vec::with_capacity(self.cfg.n_coeffs(self.side));
        let mut x: Vec<Complex64> = image
            .values()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.fft.forward(&mut x);
        self.push_lowpass(&x, &mut out);

        let mut first_order = Vec::with_capacity(jn * ln);
        for f in &self.psi {
            let u1 = self.modulus_spectrum(&self.filtered(&x, f));
            self.push_lowpass(&u1, &mut out);
            first_order.push(u1);
        }
        if self.cfg.order == 2 {
            for j1 in 0..jn {
                for l1 in 0..ln {
                    let u1 = &first_order[j1 * ln + l1];
                    for j2 in j1 + 1..jn {
                        for l2 in 0..ln {
                            let u2 =
                                self.modulus_spectrum(&self.filtered(u1, &self.psi[j2 * ln + l2]));
                            self.push_lowpass(&u2, &mut out);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

pub fn scattering_coeffs(image: &ImageGrid, cfg: &ScatteringConfig) -> Result<Vec<f64>> {
    FilterBank::new(image.side_px(), cfg)?.transform(image)
}

pub fn scattering_distance(a: &ImageGrid, b: &ImageGrid, cfg: &ScatteringConfig) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::invalid("images must have equal dimensions"));
    }
    let bank = FilterBank::new(a.side_px(), cfg)?;
    Ok(coeff_distance(&bank.transform(a)?, &bank.transform(b)?))
}

pub fn coeff_distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}
