//! Beer–Lambert photon counting with Poisson statistics.
//!
//! Each detector ray `i` receives `lambda_i = n0 * exp(-(Ax)_i)` photons on
//! average. Noisy counts are drawn ray by ray from ChaCha8 keyed by the
//! measurement seed with the ray index as stream id, so a count depends only
//! on `(seed, ray, lambda_i)`. Seed `0` selects the noise-free mode where the
//! count is `lambda_i` rounded to the nearest integer.
//!
//! Sampling uses sequential-search inversion below `lambda = 10` and Hörmann's
//! PTRS transformed rejection above it.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScanGeometry;
use crate::projector::Sinogram;
use crate::rng::Stream;

pub const DETERMINISTIC_SEED: u64 = 0;
pub const DEFAULT_FLOOR_COUNTS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonMeasurement {
    pub geometry: ScanGeometry,
    pub counts: Vec<u32>,
    pub n0: f64,
    pub seed: u64,
}

impl PhotonMeasurement {
    pub fn new(geometry: ScanGeometry, counts: Vec<u32>, n0: f64, seed: u64) -> Result<Self> {
        check_n0(n0)?;
        if counts.len() != geometry.n_rays() {
            return Err(Error::invalid("counts length must be n_angles * n_det"));
        }
        Ok(PhotonMeasurement {
            geometry,
            counts,
            n0,
            seed,
        })
    }

    pub fn is_deterministic(&self) -> bool {
        self.seed == DETERMINISTIC_SEED
    }
}

fn check_n0(n0: f64) -> Result<()> {
    if n0 > 0.0 && n0.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "incident photon count n0 must be positive and finite",
        ))
    }
}

pub fn expected_counts(sino: &Sinogram, n0: f64) -> Result<Vec<f64>> {
    check_n0(n0)?;
    Ok(sino.values().iter().map(|&s| n0 * libm::exp(-s)).collect())
}

/// Counts are stored as `u32`, so `n0` may not exceed `u32::MAX`.
pub fn simulate_counts(sino: &Sinogram, n0: f64, seed: u64) -> Result<PhotonMeasurement> {
    if n0 > u32::MAX as f64 {
        return Err(Error::invalid("n0 exceeds the u32 count range"));
    }
    let lambda = expected_counts(sino, n0)?;
    let counts = if seed == DETERMINISTIC_SEED {
        lambda.iter().map(|&l| round_count(l)).collect()
    } else {
        lambda
            .iter()
            .enumerate()
            .map(|(ray, &l)| {
                let mut rng = Stream::new(seed, ray as u64);
                sample_poisson(l, &mut rng)
            })
            .collect()
    };
    PhotonMeasurement::new(sino.geometry().clone(), counts, n0, seed)
}

fn round_count(lambda: f64) -> u32 {
    let r = libm::round(lambda);
    if r >= u32::MAX as f64 {
        u32::MAX
    } else {
        r as u32
    }
}

/// `b_i = ln(n0 / max(count_i, floor))`, clamped below at zero.
pub fn log_transform(meas: &PhotonMeasurement, floor_counts: f64) -> Result<Sinogram> {
    if floor_counts.is_nan() || floor_counts <= 0.0 {
        return Err(Error::invalid("floor_counts must be positive"));
    }
    let values = meas
        .counts
        .iter()
        .map(|&c| {
            let c = (c as f64).max(floor_counts);
            libm::log(meas.n0 / c).max(0.0)
        })
        .collect();
    Sinogram::new(meas.geometry.clone(), values)
}

/// One Poisson draw with mean `lambda`.
pub fn sample_poisson(lambda: f64, rng: &mut Stream) -> u32 {
    if lambda <= 0.0 {
        0
    } else if lambda < 10.0 {
        poisson_inversion(lambda, rng)
    } else {
        poisson_ptrs(lambda, rng)
    }
}

fn poisson_inversion(lambda: f64, rng: &mut Stream) -> u32 {
    let u = rng.uniform();
    let mut k = 0u32;
    let mut p = libm::exp(-lambda);
    let mut cdf = p;
    // the cap only triggers when rounding leaves cdf just below u
    while u > cdf && k < 1000 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}

/// Hörmann (1993), "The transformed rejection method for generating Poisson
/// random variables".
fn poisson_ptrs(lambda: f64, rng: &mut Stream) -> u32 {
    let slam = libm::sqrt(lambda);
    let loglam = libm::log(lambda);
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - u.abs();
        let k = libm::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if us >= 0.07 && v <= vr {
            return k as u32;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = libm::log(v) + libm::log(inv_alpha) - libm::log(a / (us * us) + b);
        let rhs = -lambda + k * loglam - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u32;
        }
    }
}
