//! Dirichlet eigenbasis on `(0, L)`, transforms, potentials and noise.
//!
//! The basis is `e_k(x) = sqrt(2/L) sin(k pi x / L)` with `A e_k = alpha_k e_k`
//! and `alpha_k = (k pi / L)^2`.

mod noise;
mod potential;
mod transform;

use std::f64::consts::PI;
use std::sync::Arc;

pub use noise::{NoiseSpec, DEFAULT_TAIL_FRACTION};
pub use potential::PotentialSpec;
pub use transform::{SineTransform, DIRECT_LIMIT};

use crate::error::SpectralError;

/// Interval length, Galerkin truncation and collocation size.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    length: f64,
    n_modes: usize,
    n_quad: usize,
    alpha: Arc<[f64]>,
    transform: Arc<SineTransform>,
}

impl PartialEq for DomainSpec {
    fn eq(&self, other: &Self) -> bool {
        self.length == other.length && self.n_modes == other.n_modes && self.n_quad == other.n_quad
    }
}

impl DomainSpec {
    /// Requires `n_quad >= 2 n_modes` so that cubic products are resolved exactly.
    pub fn new(length: f64, n_modes: usize, n_quad: usize) -> Result<Self, SpectralError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(SpectralError::Domain(format!("length must be positive, got {length}")));
        }
        if n_modes == 0 {
            return Err(SpectralError::Domain("n_modes must be positive".into()));
        }
        if n_quad < 2 * n_modes {
            return Err(SpectralError::Domain(format!(
                "n_quad = {n_quad} must be at least 2 * n_modes = {}",
                2 * n_modes
            )));
        }
        let alpha: Arc<[f64]> = (1..=n_modes).map(|k| (k as f64 * PI / length).powi(2)).collect();
        let transform = Arc::new(SineTransform::new(length, n_modes, n_quad));
        Ok(Self { length, n_modes, n_quad, alpha, transform })
    }

    /// Domain with the minimal dealiased collocation `n_quad = 2 n_modes`.
    pub fn with_modes(length: f64, n_modes: usize) -> Result<Self, SpectralError> {
        Self::new(length, n_modes, 2 * n_modes)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_quad(&self) -> usize {
        self.n_quad
    }

    /// `alpha_k` for the 1-based mode index `k`.
    pub fn eigenvalue(&self, k: usize) -> Result<f64, SpectralError> {
        if k == 0 || k > self.n_modes {
            return Err(SpectralError::ModeIndex { k, n_modes: self.n_modes });
        }
        Ok(self.alpha[k - 1])
    }

    /// `alpha_{i+1}` for the 0-based storage index `i`.
    #[inline]
    pub fn alpha(&self, i: usize) -> f64 {
        self.alpha[i]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn transform(&self) -> &SineTransform {
        &self.transform
    }

    /// Collocation nodes `x_j = j L / (n_quad + 1)`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.quad_spacing();
        (1..=self.n_quad).map(|j| j as f64 * h).collect()
    }

    pub fn quad_spacing(&self) -> f64 {
        self.length / (self.n_quad + 1) as f64
    }

    /// `e_k(x)` for the 1-based index `k`.
    pub fn basis(&self, k: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (k as f64 * PI * x / self.length).sin()
    }

    pub fn to_physical(&self, u: &SpectralField) -> Result<PhysicalField, SpectralError> {
        self.check_modes(u.len())?;
        let mut values = vec![0.0; self.n_quad];
        self.transform.synthesize_into(u.coeffs(), &mut values);
        Ok(PhysicalField { values })
    }

    pub fn to_spectral(&self, v: &PhysicalField) -> Result<SpectralField, SpectralError> {
        if v.len() != self.n_quad {
            return Err(SpectralError::Dimension { expected: self.n_quad, got: v.len() });
        }
        let mut coeffs = vec![0.0; self.n_modes];
        self.transform.analyze_into(v.values(), &mut coeffs);
        Ok(SpectralField { coeffs })
    }

    /// Spectral coefficients of `phi(u)`, by pointwise evaluation and analysis.
    pub fn apply_potential(&self, u: &SpectralField, phi: &PotentialSpec) -> Result<SpectralField, SpectralError> {
        self.check_modes(u.len())?;
        let mut scratch = vec![0.0; self.n_quad];
        let mut out = vec![0.0; self.n_modes];
        self.apply_potential_into(u.coeffs(), phi, &mut scratch, &mut out);
        Ok(SpectralField { coeffs: out })
    }

    /// Allocation-free form of [`DomainSpec::apply_potential`].
    pub fn apply_potential_into(&self, u: &[f64], phi: &PotentialSpec, scratch: &mut [f64], out: &mut [f64]) {
        if phi.is_linear() {
            let c = phi.coeffs().get(1).copied().unwrap_or(0.0);
            for (o, &x) in out.iter_mut().zip(u) {
                *o = c * x;
            }
            return;
        }
        self.transform.synthesize_into(u, scratch);
        for v in scratch.iter_mut() {
            *v = phi.eval(*v);
        }
        self.transform.analyze_into(scratch, out);
    }

    /// `(sum_k alpha_k^r u_k^2)^(1/2)`.
    pub fn sobolev_norm(&self, u: &SpectralField, r: f64) -> f64 {
        self.sobolev_norm_sq(u.coeffs(), r).sqrt()
    }

    pub fn sobolev_norm_sq(&self, u: &[f64], r: f64) -> f64 {
        if r == 0.0 {
            return u.iter().map(|c| c * c).sum();
        }
        u.iter().zip(self.alpha.iter()).map(|(c, a)| a.powf(r) * c * c).sum()
    }

    /// `sqrt(h sum_j v_j^2)`, the collocation L2 norm.
    pub fn physical_l2_norm(&self, v: &PhysicalField) -> f64 {
        (self.quad_spacing() * v.values().iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    /// `h sum_j v_j^p`, exact for band-limited `u` when `p <= 2 n_quad / n_modes - 1`.
    pub fn physical_moment(&self, v: &PhysicalField, p: i32) -> f64 {
        self.quad_spacing() * v.values().iter().map(|x| x.powi(p)).sum::<f64>()
    }

    fn check_modes(&self, n: usize) -> Result<(), SpectralError> {
        if n != self.n_modes {
            return Err(SpectralError::Dimension { expected: self.n_modes, got: n });
        }
        Ok(())
    }
}

/// Coefficients `<u, e_k>` for `k = 1..=n_modes`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(n_modes: usize) -> Self {
        Self { coeffs: vec![0.0; n_modes] }
    }

    /// Rejects non-finite entries.
    pub fn new(coeffs: Vec<f64>) -> Result<Self, SpectralError> {
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(SpectralError::NonFinite(format!("coefficient {}", i + 1)));
        }
        Ok(Self { coeffs })
    }

    pub(crate) fn from_vec(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// `amplitude * e_k` for the 1-based index `k`.
    pub fn mode(n_modes: usize, k: usize, amplitude: f64) -> Self {
        let mut f = Self::zeros(n_modes);
        f.coeffs[k - 1] = amplitude;
        f
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| s * a).collect() }
    }
}

/// Values at the collocation nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Samples `f` at the collocation nodes of `domain`.
    pub fn sample(domain: &DomainSpec, f: impl Fn(f64) -> f64) -> Self {
        Self { values: domain.nodes().into_iter().map(f).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
