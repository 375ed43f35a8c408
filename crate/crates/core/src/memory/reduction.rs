//! Exact finite-dimensional closure of the history for exponential kernels.
//!
//! For `mu_eps(s) = c (delta^2 / eps^2) exp(-delta s / eps)` with `r = delta / eps`
//! and mass `M = c delta / eps`, the kernel averages
//! `m_k = int mu_eps eta_k ds` and `n_k = int mu_eps eta_k^2 ds` obey
//!
//! ```text
//! dm/dt = -r m + M u,        dn/dt = -r n + 2 u m,
//! ```
//!
//! because `mu_eps' = -r mu_eps` and `eta(t, 0) = 0`. The weighted history norms
//! are then `sum_k alpha_k^(1+beta) n_k`, so energy functionals stay exact
//! without resolving the age variable.

use super::grid::HistoryGrid;
use super::history::HistoryField;
use super::kernel::KernelSpec;
use crate::error::MemoryError;
use crate::quadrature::gauss_legendre;
use crate::spectral::{DomainSpec, SpectralField};

/// Kernel averages `m_k` and quadratic moments `n_k` of the history, per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMemoryState {
    m: Vec<f64>,
    energy: Vec<f64>,
}

/// Step coefficients for a fixed kernel and time step, with `u` frozen over the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpStepCoeffs {
    pub decay: f64,
    pub gain: f64,
    pub cross_m: f64,
    pub cross_u: f64,
}

impl ExpStepCoeffs {
    pub fn new(kernel: &KernelSpec, dt: f64) -> Result<Self, MemoryError> {
        let mass = kernel.exponential_mass()?;
        let r = kernel.rate();
        let x = r * dt;
        let decay = (-x).exp();
        let one_minus = -(-x).exp_m1();
        // (1 - e^-x)/x - e^-x, expanded near zero to avoid cancellation.
        let f = if x < 1e-3 { x / 2.0 - x * x / 3.0 + x.powi(3) / 8.0 - x.powi(4) / 30.0 } else { one_minus / x - decay };
        Ok(Self { decay, gain: mass / r * one_minus, cross_m: dt * decay, cross_u: mass / r * dt * f })
    }
}

impl ExpMemoryState {
    pub fn zeros(n_modes: usize) -> Self {
        Self { m: vec![0.0; n_modes], energy: vec![0.0; n_modes] }
    }

    pub fn from_parts(m: Vec<f64>, energy: Vec<f64>) -> Result<Self, MemoryError> {
        if m.len() != energy.len() {
            return Err(MemoryError::Dimension { expected: m.len(), got: energy.len() });
        }
        Ok(Self { m, energy })
    }

    /// Grid quadrature of a sampled history.
    pub fn from_history(eta: &HistoryField, grid: &HistoryGrid) -> Self {
        let w = grid.weights();
        let v = eta.values();
        let m = v.rows().into_iter().map(|row| row.iter().zip(w).map(|(e, w)| w * e).sum()).collect();
        let energy = v.rows().into_iter().map(|row| row.iter().zip(w).map(|(e, w)| w * e * e).sum()).collect();
        Self { m, energy }
    }

    /// Fine quadrature of the history generated by a past trajectory `r -> u(-r)`.
    pub fn from_past(u_past: impl Fn(f64) -> SpectralField, n_modes: usize, kernel: &KernelSpec) -> Self {
        let q = kernel.quadrature();
        let (gx, gw) = gauss_legendre(4);
        let mut eta = vec![0.0; n_modes];
        let mut m = vec![0.0; n_modes];
        let mut energy = vec![0.0; n_modes];
        let mut prev = 0.0;
        for ((&s, &w), &mu) in q.s.iter().zip(&q.w).zip(&q.mu) {
            let (mid, half) = (0.5 * (prev + s), 0.5 * (s - prev));
            for (x, gwi) in gx.iter().zip(&gw) {
                let u = u_past(mid + half * x);
                for (e, c) in eta.iter_mut().zip(u.coeffs()) {
                    *e += half * gwi * c;
                }
            }
            for k in 0..n_modes {
                m[k] += w * mu * eta[k];
                energy[k] += w * mu * eta[k] * eta[k];
            }
            prev = s;
        }
        Self { m, energy }
    }

    /// Closed form for the constant past `u(-r) = u0`, where `eta_0(s) = s u0`.
    pub fn constant_past(u0: &SpectralField, kernel: &KernelSpec) -> Result<Self, MemoryError> {
        kernel.exponential_mass()?;
        let c = kernel.normalization();
        let second = c * 2.0 / kernel.rate();
        let m = u0.coeffs().iter().map(|u| c * u).collect();
        let energy = u0.coeffs().iter().map(|u| second * u * u).collect();
        Ok(Self { m, energy })
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Advances by one step with `u` frozen, using precomputed coefficients.
    #[inline]
    pub fn step_in_place(&mut self, u: &[f64], c: &ExpStepCoeffs) {
        for ((m, n), &u) in self.m.iter_mut().zip(self.energy.iter_mut()).zip(u) {
            *n = c.decay * *n + 2.0 * u * (c.cross_m * *m + c.cross_u * u);
            *m = c.decay * *m + c.gain * u;
        }
    }

    /// `sum_k alpha_k^(1+beta) n_k`, the squared weighted history norm.
    pub fn norm_sq(&self, beta: u8, domain: &DomainSpec) -> f64 {
        self.energy.iter().zip(domain.alphas()).map(|(n, a)| a.powi(1 + beta as i32) * n).sum()
    }

    /// `g_k = alpha_k m_k`.
    pub fn drift(&self, domain: &DomainSpec) -> SpectralField {
        SpectralField::from_vec(self.m.iter().zip(domain.alphas()).map(|(m, a)| a * m).collect())
    }
}

/// One exact step `m <- e^{-r dt} m + (M / r)(1 - e^{-r dt}) u`, with the matching moment update.
pub fn exp_reduction_step(state: &ExpMemoryState, u: &SpectralField, dt: f64, kernel: &KernelSpec) -> Result<ExpMemoryState, MemoryError> {
    if u.len() != state.len() {
        return Err(MemoryError::Dimension { expected: state.len(), got: u.len() });
    }
    let c = ExpStepCoeffs::new(kernel, dt)?;
    let mut next = state.clone();
    next.step_in_place(u.coeffs(), &c);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::kernel::{rescale_kernel, KernelTable};

    fn kernel(eps: f64) -> KernelSpec {
        rescale_kernel(&KernelSpec::exponential(1.0).unwrap(), eps).unwrap()
    }

    #[test]
    fn frozen_unit_drive() {
        let k = kernel(0.5);
        let u = SpectralField::mode(3, 1, 1.0);
        let mut s = ExpMemoryState::zeros(3);
        let c = ExpStepCoeffs::new(&k, 0.01).unwrap();
        for _ in 0..100 {
            s.step_in_place(u.coeffs(), &c);
        }
        assert!((s.m()[0] - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
        // With u frozen at 1 the history is eta(s) = min(s, t).
        let exact_n = k.quadrature().integrate(|s| s.min(1.0).powi(2));
        assert!((s.energy()[0] - exact_n).abs() < 1e-10, "{} vs {}", s.energy()[0], exact_n);
        assert_eq!(s.energy()[1], 0.0);
    }

    #[test]
    fn zero_stays_zero() {
        let next = exp_reduction_step(&ExpMemoryState::zeros(2), &SpectralField::zeros(2), 0.1, &kernel(1.0)).unwrap();
        assert_eq!(next, ExpMemoryState::zeros(2));
    }

    #[test]
    fn rejects_tabulated_kernels() {
        let t = KernelTable::new(vec![0.0, 1.0], vec![1.0, 0.5], None).unwrap();
        let k = KernelSpec::tabulated(t);
        assert!(matches!(ExpStepCoeffs::new(&k, 0.1), Err(MemoryError::NotExponential)));
    }

    #[test]
    fn constant_past_matches_quadrature() {
        let k = kernel(0.25);
        let u0 = SpectralField::new(vec![0.7, -0.2]).unwrap();
        let a = ExpMemoryState::constant_past(&u0, &k).unwrap();
        let b = ExpMemoryState::from_past(|_| u0.clone(), 2, &k);
        for i in 0..2 {
            assert!((a.m()[i] - b.m()[i]).abs() < 1e-10);
            assert!((a.energy()[i] - b.energy()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn small_rate_coefficients_are_continuous() {
        let k = kernel(1.0);
        let a = ExpStepCoeffs::new(&k, 0.999e-3).unwrap();
        let b = ExpStepCoeffs::new(&k, 1.001e-3).unwrap();
        assert!((a.cross_u / 0.999e-3f64.powi(2) - b.cross_u / 1.001e-3f64.powi(2)).abs() < 1e-5);
    }
}
