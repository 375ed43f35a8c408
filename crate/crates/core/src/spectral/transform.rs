//! Discrete sine transforms between eigen-coefficients and collocation values.
//!
//! Collocation nodes are `x_j = j L / (N + 1)` for `j = 1..=N`. Synthesis is a
//! truncated sine series; analysis is the matching DST-I quadrature, which is
//! exact for fields spanned by the first `N` modes.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Largest collocation size served by the dense matrix path.
pub const DIRECT_LIMIT: usize = 256;

enum Backend {
    /// Row-major `n_modes x n_quad` table of `sqrt(2/L) sin(k pi x_j / L)`.
    Direct(Vec<f64>),
    /// FFT of length `2(N + 1)` computing a DST-I.
    Fast(Arc<dyn Fft<f64>>),
}

/// Precomputed sine transform for one `(L, n_modes, n_quad)` triple.
pub struct SineTransform {
    length: f64,
    n_modes: usize,
    n_quad: usize,
    backend: Backend,
}

impl fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.backend {
            Backend::Direct(_) => "direct",
            Backend::Fast(_) => "fast",
        };
        f.debug_struct("SineTransform")
            .field("length", &self.length)
            .field("n_modes", &self.n_modes)
            .field("n_quad", &self.n_quad)
            .field("backend", &kind)
            .finish()
    }
}

impl SineTransform {
    /// Picks the dense path up to [`DIRECT_LIMIT`] nodes and the FFT path above.
    pub fn new(length: f64, n_modes: usize, n_quad: usize) -> Self {
        if n_quad <= DIRECT_LIMIT {
            Self::direct(length, n_modes, n_quad)
        } else {
            Self::fast(length, n_modes, n_quad)
        }
    }

    pub fn direct(length: f64, n_modes: usize, n_quad: usize) -> Self {
        let norm = (2.0 / length).sqrt();
        let h = PI / (n_quad + 1) as f64;
        let mut table = Vec::with_capacity(n_modes * n_quad);
        for k in 1..=n_modes {
            for j in 1..=n_quad {
                // Reduce the phase index mod 2(N+1) to keep sin() arguments small.
                let idx = (k * j) % (2 * (n_quad + 1));
                table.push(norm * (h * idx as f64).sin());
            }
        }
        Self { length, n_modes, n_quad, backend: Backend::Direct(table) }
    }

    pub fn fast(length: f64, n_modes: usize, n_quad: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n_quad + 1));
        Self { length, n_modes, n_quad, backend: Backend::Fast(fft) }
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct(_))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_quad(&self) -> usize {
        self.n_quad
    }

    /// `values[j] = sum_k coeffs[k] e_k(x_j)`.
    pub fn synthesize_into(&self, coeffs: &[f64], values: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.n_modes);
        debug_assert_eq!(values.len(), self.n_quad);
        match &self.backend {
            Backend::Direct(table) => {
                values.fill(0.0);
                for (row, &c) in table.chunks_exact(self.n_quad).zip(coeffs) {
                    if c != 0.0 {
                        for (v, &b) in values.iter_mut().zip(row) {
                            *v += c * b;
                        }
                    }
                }
            }
            Backend::Fast(fft) => {
                let n = self.n_quad;
                let mut padded = vec![0.0; n];
                let m = self.n_modes.min(n);
                padded[..m].copy_from_slice(&coeffs[..m]);
                dst1(fft.as_ref(), &padded, values);
                let norm = (2.0 / self.length).sqrt();
                values.iter_mut().for_each(|v| *v *= norm);
            }
        }
    }

    /// `coeffs[k] = L/(N+1) sum_j values[j] e_k(x_j)`.
    pub fn analyze_into(&self, values: &[f64], coeffs: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.n_modes);
        debug_assert_eq!(values.len(), self.n_quad);
        let h = self.length / (self.n_quad + 1) as f64;
        match &self.backend {
            Backend::Direct(table) => {
                for (row, c) in table.chunks_exact(self.n_quad).zip(coeffs.iter_mut()) {
                    *c = h * dot(row, values);
                }
            }
            Backend::Fast(fft) => {
                let mut out = vec![0.0; self.n_quad];
                dst1(fft.as_ref(), values, &mut out);
                let scale = h * (2.0 / self.length).sqrt();
                let m = self.n_modes.min(self.n_quad);
                for (c, o) in coeffs[..m].iter_mut().zip(&out) {
                    *c = scale * o;
                }
                coeffs[m..].fill(0.0);
            }
        }
    }
}

/// Dot product with independent lane accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Unnormalised DST-I, `out[k-1] = sum_j x[j-1] sin(pi j k / (N+1))`.
fn dst1(fft: &dyn Fft<f64>, x: &[f64], out: &mut [f64]) {
    let n = x.len();
    let len = 2 * (n + 1);
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (j, &v) in x.iter().enumerate() {
        buf[j + 1].re = v;
        buf[len - 1 - j].re = -v;
    }
    fft.process(&mut buf);
    for (k, o) in out.iter_mut().enumerate() {
        *o = -0.5 * buf[k + 1].im;
    }
}
