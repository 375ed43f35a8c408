//! Diagonal additive noise `Q dW` in the eigenbasis.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DomainSpec, SpectralField};
use crate::error::SpectralError;

/// Default bound on the truncated-tail share of `Tr(QAQ)`.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.05;

/// Noise intensities `q_k` on each mode and the number `n_bar` of forced modes.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    q: Vec<f64>,
    n_bar: usize,
}

impl NoiseSpec {
    pub fn new(q: Vec<f64>, n_bar: usize) -> Result<Self, SpectralError> {
        if q.is_empty() {
            return Err(SpectralError::Noise("no modes".into()));
        }
        if let Some(k) = q.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(SpectralError::Noise(format!("q_{} = {} must be finite and nonnegative", k + 1, q[k])));
        }
        if n_bar == 0 || n_bar > q.len() {
            return Err(SpectralError::Noise(format!("n_bar = {n_bar} must lie in 1..={}", q.len())));
        }
        Ok(Self { q, n_bar })
    }

    /// `q_k = q0 / k^power` on `n_modes` modes.
    pub fn power_law(n_modes: usize, q0: f64, power: f64, n_bar: usize) -> Result<Self, SpectralError> {
        Self::new((1..=n_modes).map(|k| q0 / (k as f64).powf(power)).collect(), n_bar)
    }

    /// Noise switched off, keeping the mode count.
    pub fn silent(n_modes: usize, n_bar: usize) -> Result<Self, SpectralError> {
        Self::new(vec![0.0; n_modes], n_bar)
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn n_bar(&self) -> usize {
        self.n_bar
    }

    pub fn n_modes(&self) -> usize {
        self.q.len()
    }

    /// `a_Q = min_{k <= n_bar} q_k`.
    pub fn a_q(&self) -> f64 {
        self.q[..self.n_bar].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Tr(QQ*) = sum q_k^2` over the stored modes.
    pub fn trace_qq(&self) -> f64 {
        self.q.iter().map(|q| q * q).sum()
    }

    /// `Tr(QAQ*) = sum q_k^2 alpha_k` over the stored modes.
    pub fn trace_qaq(&self, domain: &DomainSpec) -> f64 {
        self.q.iter().enumerate().map(|(i, q)| q * q * domain.alpha(i)).sum()
    }

    /// Share of `Tr(QAQ*)` carried by the upper half of the modes relative to the lower half.
    pub fn tail_ratio(&self, domain: &DomainSpec) -> f64 {
        let half = self.q.len() / 2;
        let term = |i: usize| self.q[i] * self.q[i] * domain.alpha(i);
        let head: f64 = (0..half).map(term).sum();
        let tail: f64 = (half..self.q.len()).map(term).sum();
        if head == 0.0 {
            if tail == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            tail / head
        }
    }

    /// Draws one increment with independent `N(0, q_k^2 dt)` components, mode by mode.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> SpectralField {
        let sq = dt.sqrt();
        let coeffs = self
            .q
            .iter()
            .map(|q| {
                let xi: f64 = rng.sample(StandardNormal);
                q * sq * xi
            })
            .collect();
        SpectralField::from_vec(coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_noise_gives_zero_increment() {
        let n = NoiseSpec::silent(8, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(n.sample_increment(0.1, &mut rng).coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn identical_streams_match() {
        let n = NoiseSpec::power_law(16, 0.25, 2.0, 2).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            assert_eq!(n.sample_increment(0.01, &mut a), n.sample_increment(0.01, &mut b));
        }
    }

    #[test]
    fn forcing_floor() {
        let n = NoiseSpec::power_law(64, 0.25, 2.0, 2).unwrap();
        assert!((n.a_q() - 0.0625).abs() < 1e-15);
        assert!(NoiseSpec::new(vec![0.1, -0.1], 1).is_err());
        assert!(NoiseSpec::new(vec![0.1, 0.1], 3).is_err());
    }
}
