//! Real trigonometric transforms built on complex FFTs.
//!
//! `Dst1` evaluates `S_i = Σ_{k=1}^{m-1} b_k sin(π i k / m)` and `Dct1`
//! evaluates `C_i = Σ_{k=1}^{m-1} b_k cos(π i k / m)` at `i = 1..m-1`, both
//! through an odd/even extension of length `2m`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub struct Dst1 {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1 {
    pub fn new(m: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * m);
        Dst1 { m, fft }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    /// `coeffs` holds `b_1..b_K` with `K ≤ m-1`; the rest are zero.
    /// Returns the `m-1` interior samples.
    pub fn apply(&self, coeffs: &[f64], out: &mut [f64]) {
        let m = self.m;
        debug_assert!(coeffs.len() < m);
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * m];
        for (k, &b) in coeffs.iter().enumerate() {
            buf[k + 1].re = b;
            buf[2 * m - k - 1].re = -b;
        }
        self.fft.process(&mut buf);
        for i in 1..m {
            out[i - 1] = -0.5 * buf[i].im;
        }
    }
}

pub struct Dct1 {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dct1 {
    pub fn new(m: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * m);
        Dct1 { m, fft }
    }

    /// Same conventions as [`Dst1::apply`] with `coeffs[k-1] = b_k`.
    pub fn apply(&self, coeffs: &[f64], out: &mut [f64]) {
        let m = self.m;
        debug_assert!(coeffs.len() < m);
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * m];
        for (k, &b) in coeffs.iter().enumerate() {
            buf[k + 1].re = b;
            buf[2 * m - k - 1].re = b;
        }
        self.fft.process(&mut buf);
        for i in 1..m {
            out[i - 1] = 0.5 * buf[i].re;
        }
    }
}

/// Separable 2D transform on a `rows × cols` coefficient block held row-major
/// (`[l][k]`, `k` along x). Each axis picks sine or cosine synthesis.
pub fn synth_2d(
    coeffs: &[f64],
    kx: usize,
    x: &dyn Fn(&[f64], &mut [f64]),
    y: &dyn Fn(&[f64], &mut [f64]),
    m: usize,
) -> Vec<f64> {
    let n_out = m - 1;
    debug_assert_eq!(coeffs.len(), kx * kx);
    // x pass: for each coefficient row l, synthesize along x
    let mut stage = vec![0.0; kx * n_out];
    for l in 0..kx {
        x(&coeffs[l * kx..(l + 1) * kx], &mut stage[l * n_out..(l + 1) * n_out]);
    }
    // y pass: for each output column i, synthesize along y
    let mut out = vec![0.0; n_out * n_out];
    let mut col = vec![0.0; kx];
    let mut res = vec![0.0; n_out];
    for i in 0..n_out {
        for l in 0..kx {
            col[l] = stage[l * n_out + i];
        }
        y(&col, &mut res);
        for j in 0..n_out {
            out[j * n_out + i] = res[j];
        }
    }
    out
}

/// Forward sine analysis on `(m-1)²` interior samples returning the first
/// `kx²` coefficients of `f = Σ b_kl sin(kπx) sin(lπy)`.
pub fn analyze_sine_2d(samples: &[f64], dst: &Dst1, kx: usize) -> Vec<f64> {
    let m = dst.len();
    let n = m - 1;
    debug_assert_eq!(samples.len(), n * n);
    let scale = 2.0 / m as f64;
    // DST-I is its own inverse up to the factor 2/m.
    let mut stage = vec![0.0; n * kx];
    let mut res = vec![0.0; n];
    for j in 0..n {
        dst.apply(&samples[j * n..(j + 1) * n], &mut res);
        for k in 0..kx {
            stage[j * kx + k] = scale * res[k];
        }
    }
    let mut out = vec![0.0; kx * kx];
    let mut col = vec![0.0; n];
    for k in 0..kx {
        for j in 0..n {
            col[j] = stage[j * kx + k];
        }
        dst.apply(&col, &mut res);
        for l in 0..kx {
            out[l * kx + k] = scale * res[l];
        }
    }
    out
}

/// Orthonormal DCT-II matrix `Q[k][i] = s_k cos(π k (i+½)/n)`, row-major.
pub fn dct2_matrix(n: usize) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    for k in 0..n {
        let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for i in 0..n {
            q[k * n + i] = s * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n as f64).cos();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dst_and_dct_match_direct_sums() {
        let m = 12;
        let b: Vec<f64> = (1..8).map(|k| 1.0 / k as f64 + 0.3 * (k as f64).sin()).collect();
        let mut s = vec![0.0; m - 1];
        let mut c = vec![0.0; m - 1];
        Dst1::new(m).apply(&b, &mut s);
        Dct1::new(m).apply(&b, &mut c);
        for i in 1..m {
            let mut ds = 0.0;
            let mut dc = 0.0;
            for (k, bk) in b.iter().enumerate() {
                let a = PI * i as f64 * (k + 1) as f64 / m as f64;
                ds += bk * a.sin();
                dc += bk * a.cos();
            }
            assert!((s[i - 1] - ds).abs() < 1e-13);
            assert!((c[i - 1] - dc).abs() < 1e-13);
        }
    }

    #[test]
    fn sine_round_trip_2d() {
        let kx = 5;
        let m = 9;
        let coeffs: Vec<f64> = (0..kx * kx).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let dst = Dst1::new(m);
        let f = |c: &[f64], o: &mut [f64]| dst.apply(c, o);
        let samples = synth_2d(&coeffs, kx, &f, &f, m);
        let back = analyze_sine_2d(&samples, &dst, kx);
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dct2_is_orthonormal() {
        let n = 10;
        let q = dct2_matrix(n);
        for a in 0..n {
            for b in 0..n {
                let d: f64 = (0..n).map(|i| q[a * n + i] * q[b * n + i]).sum();
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-13);
            }
        }
    }
}
