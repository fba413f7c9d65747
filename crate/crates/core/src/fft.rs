//! Complex discrete Fourier transforms.
//!
//! Power-of-two lengths use an iterative radix-2 Cooley–Tukey kernel with a
//! precomputed twiddle table; other lengths fall back to a direct `O(n^2)`
//! transform. Forward transforms use `exp(-2 pi i k n / N)` and are
//! unnormalized; the inverse divides by `N`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    /// `exp(-2 pi i k / len)` for `k < len`.
    twiddles: Vec<Complex64>,
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        let twiddles = (0..len)
            .map(|k| {
                let (s, c) = libm::sincos(-2.0 * PI * k as f64 / len as f64);
                Complex64::new(c, s)
            })
            .collect();
        Fft { len, twiddles }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.len);
        if self.len.is_power_of_two() {
            self.radix2(data, inverse);
        } else {
            self.direct(data, inverse);
        }
    }

    fn twiddle(&self, idx: usize, inverse: bool) -> Complex64 {
        let w = self.twiddles[idx % self.len];
        if inverse {
            w.conj()
        } else {
            w
        }
    }

    fn radix2(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.len;
        if n == 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let w = self.twiddle(k * stride, inverse);
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }

    fn direct(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.len;
        let input: Vec<Complex64> = data.to_vec();
        for (k, out) in data.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, x) in input.iter().enumerate() {
                acc += x * self.twiddle((k * j) % n, inverse);
            }
            *out = acc;
        }
    }
}

/// Square 2D transform applied row-then-column on row-major data.
#[derive(Debug, Clone)]
pub struct Fft2 {
    side: usize,
    fft: Fft,
}

impl Fft2 {
    pub fn new(side: usize) -> Self {
        Fft2 {
            side,
            fft: Fft::new(side),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, true);
    }

    fn apply(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.side;
        assert_eq!(data.len(), n * n);
        for row in data.chunks_exact_mut(n) {
            if inverse {
                self.fft.inverse(row);
            } else {
                self.fft.forward(row);
            }
        }
        let mut col = alloc::vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = data[r * n + c];
            }
            if inverse {
                self.fft.inverse(&mut col);
            } else {
                self.fft.forward(&mut col);
            }
            for r in 0..n {
                data[r * n + c] = col[r];
            }
        }
    }
}

/// Angular frequency (radians per sample) of FFT bin `k` for length `n`,
/// in `[-pi, pi)`.
pub fn bin_frequency(k: usize, n: usize) -> f64 {
    let k = if 2 * k >= n {
        k as f64 - n as f64
    } else {
        k as f64
    };
    2.0 * PI * k / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn naive(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let ang = -2.0 * PI * (k * j) as f64 / n as f64;
                        v * Complex64::new(ang.cos(), ang.sin())
                    })
                    .sum()
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin() + 0.1 * i as f64, (i as f64).cos()))
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [1, 2, 8, 64, 6, 12, 15] {
            let x = signal(n);
            let mut y = x.clone();
            Fft::new(n).forward(&mut y);
            let want = naive(&x);
            for (a, b) in y.iter().zip(&want) {
                assert!((a - b).norm() < 1e-9 * (1.0 + b.norm()), "n={n}");
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        for n in [16, 10] {
            let x = signal(n);
            let mut y = x.clone();
            let f = Fft::new(n);
            f.forward(&mut y);
            f.inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fft2_of_delta_is_flat() {
        let n = 8;
        let mut d = vec![Complex64::new(0.0, 0.0); n * n];
        d[0] = Complex64::new(1.0, 0.0);
        Fft2::new(n).forward(&mut d);
        assert!(d
            .iter()
            .all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn bin_frequencies() {
        assert_eq!(bin_frequency(0, 8), 0.0);
        assert_eq!(bin_frequency(4, 8), -PI);
        assert!((bin_frequency(7, 8) + PI / 4.0).abs() < 1e-15);
    }
}
