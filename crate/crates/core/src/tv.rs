//! Isotropic total variation and its proximal operator.
//!
//! The discrete gradient uses forward differences with a replicated
//! boundary, so the last column (row) has a zero horizontal (vertical)
//! difference. `divergence` is the negative adjoint of `gradient`.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::ImageGrid;

/// Chambolle's dual step; convergence needs `tau <= 1/8`.
const DUAL_STEP: f64 = 0.125;

pub(crate) fn gradient(x: &[f64], n: usize, gx: &mut [f64], gy: &mut [f64]) {
    for r in 0..n {
        for c in 0..n {
            let i = r * n + c;
            gx[i] = if c + 1 < n { x[i + 1] - x[i] } else { 0.0 };
            gy[i] = if r + 1 < n { x[i + n] - x[i] } else { 0.0 };
        }
    }
}

pub(crate) fn divergence(px: &[f64], py: &[f64], n: usize, out: &mut [f64]) {
    for r in 0..n {
        for c in 0..n {
            let i = r * n + c;
            let dx = match c {
                0 => px[i],
                _ if c + 1 == n => -px[i - 1],
                _ => px[i] - px[i - 1],
            };
            let dy = match r {
                0 => py[i],
                _ if r + 1 == n => -py[i - n],
                _ => py[i] - py[i - n],
            };
            out[i] = if n == 1 { 0.0 } else { dx + dy };
        }
    }
}

pub(crate) fn tv_of(x: &[f64], n: usize) -> f64 {
    let mut total = 0.0;
    for r in 0..n {
        for c in 0..n {
            let i = r * n + c;
            let dx = if c + 1 < n { x[i + 1] - x[i] } else { 0.0 };
            let dy = if r + 1 < n { x[i + n] - x[i] } else { 0.0 };
            total += libm::sqrt(dx * dx + dy * dy);
        }
    }
    total
}

pub fn tv_value(image: &ImageGrid) -> f64 {
    tv_of(image.values(), image.side_px())
}

/// `0.5 ||u - x||^2 + weight * TV(u)`.
pub fn prox_objective(u: &[f64], x: &[f64], n: usize, weight: f64) -> f64 {
    let fit: f64 = u.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    0.5 * fit + weight * tv_of(u, n)
}

/// Approximate `argmin_u 0.5 ||u - x||^2 + weight * TV(u)` with Chambolle's
/// dual projection iterations. If the iterate does not improve the prox
/// objective over `x` itself, `x` is returned unchanged.
pub fn tv_prox(image: &ImageGrid, weight: f64, inner_iters: usize) -> ImageGrid {
    let mut out = image.clone();
    tv_prox_in_place(out.values_mut(), image.side_px(), weight, inner_iters);
    out
}

pub(crate) fn tv_prox_in_place(x: &mut [f64], n: usize, weight: f64, inner_iters: usize) {
    if weight <= 0.0 || inner_iters == 0 {
        return;
    }
    let len = n * n;
    let mut px = vec![0.0; len];
    let mut py = vec![0.0; len];
    let mut div = vec![0.0; len];
    let mut gx = vec![0.0; len];
    let mut gy = vec![0.0; len];
    let mut w = vec![0.0; len];
    let inv = 1.0 / weight;
    for _ in 0..inner_iters {
        divergence(&px, &py, n, &mut div);
        for i in 0..len {
            w[i] = div[i] - x[i] * inv;
        }
        gradient(&w, n, &mut gx, &mut gy);
        for i in 0..len {
            let norm = libm::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
            let denom = 1.0 + DUAL_STEP * norm;
            px[i] = (px[i] + DUAL_STEP * gx[i]) / denom;
            py[i] = (py[i] + DUAL_STEP * gy[i]) / denom;
        }
    }
    divergence(&px, &py, n, &mut div);
    let u: Vec<f64> = x.iter().zip(&div).map(|(v, d)| v - weight * d).collect();
    if prox_objective(&u, x, n, weight) <= weight * tv_of(x, n) {
        x.copy_from_slice(&u);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = Stream::new(seed, 0);
        (0..n * n).map(|_| s.uniform()).collect()
    }

    #[test]
    fn divergence_is_negative_adjoint_of_gradient() {
        let n = 9;
        let x = random(n, 1);
        let px = random(n, 2);
        let py = random(n, 3);
        let mut gx = vec![0.0; n * n];
        let mut gy = vec![0.0; n * n];
        gradient(&x, n, &mut gx, &mut gy);
        let mut div = vec![0.0; n * n];
        divergence(&px, &py, n, &mut div);
        let lhs: f64 = gx.iter().zip(&px).map(|(a, b)| a * b).sum::<f64>()
            + gy.iter().zip(&py).map(|(a, b)| a * b).sum::<f64>();
        let rhs: f64 = -x.iter().zip(&div).map(|(a, b)| a * b).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn constant_has_zero_tv() {
        let img = ImageGrid::from_values(6, 1.0, vec![0.7; 36]).unwrap();
        assert_eq!(tv_value(&img), 0.0);
    }

    #[test]
    fn vertical_step_counts_rows() {
        let n = 10;
        let mut v = vec![0.0; n * n];
        for r in 0..n {
            for c in 5..n {
                v[r * n + c] = 1.0;
            }
        }
        let img = ImageGrid::from_values(n, 1.0, v).unwrap();
        assert_eq!(tv_value(&img), n as f64);
    }

    #[test]
    fn homogeneity() {
        let n = 8;
        let x = random(n, 4);
        let img = ImageGrid::from_values(n, 1.0, x.clone()).unwrap();
        let scaled = img.with_values(x.iter().map(|v| -2.5 * v).collect());
        assert!((tv_value(&scaled) - 2.5 * tv_value(&img)).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_and_constant_are_identity() {
        let n = 8;
        let img = ImageGrid::from_values(n, 1.0, random(n, 5)).unwrap();
        assert_eq!(tv_prox(&img, 0.0, 20).values(), img.values());
        let c = ImageGrid::from_values(n, 1.0, vec![0.3; n * n]).unwrap();
        assert_eq!(tv_prox(&c, 0.7, 20).values(), c.values());
    }

    #[test]
    fn prox_decreases_objective() {
        let n = 16;
        let x = random(n, 6);
        let img = ImageGrid::from_values(n, 1.0, x.clone()).unwrap();
        for w in [0.01, 0.1, 1.0] {
            let u = tv_prox(&img, w, 20);
            assert!(prox_objective(u.values(), &x, n, w) <= w * tv_of(&x, n));
        }
    }
}
