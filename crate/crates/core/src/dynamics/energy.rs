//! Lyapunov energies and the extended-space norm.

use super::{ExtendedState, MemoryState, SystemSpec};
use crate::error::DynamicsError;

/// `||eta||^2` of order `beta` for either history representation; zero when absent.
pub(crate) fn history_norm_sq(memory: &MemoryState, beta: u8, spec: &SystemSpec) -> f64 {
    let d = &spec.domain;
    match memory {
        MemoryState::Exp(m) => m.norm_sq(beta, d),
        MemoryState::Grid(eta) => {
            let w = spec.grid().map(|g| g.weights()).unwrap_or(&[]);
            eta.values()
                .rows()
                .into_iter()
                .enumerate()
                .map(|(k, row)| d.alpha(k).powi(1 + beta as i32) * row.iter().zip(w).map(|(e, w)| w * e * e).sum::<f64>())
                .sum()
        }
        MemoryState::None => 0.0,
    }
}

/// `||U||^2 = ||u||^2 + ||eta||^2` in the extended energy space.
pub fn h0_norm_sq(state: &ExtendedState, spec: &SystemSpec) -> f64 {
    state.u.norm_sq() + history_norm_sq(&state.memory, 0, spec)
}

/// `Psi_0 = ||u||^2 / 2 + (1 - kappa) ||eta||^2 / 2`.
pub fn energy_psi0(state: &ExtendedState, spec: &SystemSpec) -> f64 {
    0.5 * state.u.norm_sq() + 0.5 * (1.0 - spec.kappa) * history_norm_sq(&state.memory, 0, spec)
}

/// `Psi_1 = ||u||_{H^1}^2 / 2 + (1 - kappa) ||eta||_{M^1}^2 / 2`.
pub fn energy_psi1(state: &ExtendedState, spec: &SystemSpec) -> f64 {
    0.5 * spec.domain.sobolev_norm_sq(state.u.coeffs(), 1.0) + 0.5 * (1.0 - spec.kappa) * history_norm_sq(&state.memory, 1, spec)
}

/// `kappa_1 ||u||^2 / 2 + kappa_2 ||eta||^2 / 2`; `(1, 1 - kappa)` recovers `Psi_0`.
pub fn energy_psi0_tilde(state: &ExtendedState, spec: &SystemSpec, kappa1: f64, kappa2: f64) -> Result<f64, DynamicsError> {
    if !(kappa1 > 0.0 && kappa2 > 0.0) {
        return Err(DynamicsError::System(format!("energy weights must be positive, got ({kappa1}, {kappa2})")));
    }
    Ok(0.5 * kappa1 * state.u.norm_sq() + 0.5 * kappa2 * history_norm_sq(&state.memory, 0, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::MemoryBackend;
    use crate::spectral::SpectralField;

    #[test]
    fn examples() {
        let spec = SystemSpec::reference(1.0, MemoryBackend::ExpReduction).unwrap();
        let zero = ExtendedState::zero(&spec);
        assert_eq!(energy_psi0(&zero, &spec), 0.0);
        assert_eq!(energy_psi1(&zero, &spec), 0.0);
        assert_eq!(energy_psi0_tilde(&zero, &spec, 1.0, 1.0).unwrap(), 0.0);
        let st = ExtendedState::new(SpectralField::mode(64, 1, 2.0), spec.zero_history());
        assert_eq!(energy_psi0(&st, &spec), 2.0);
        // alpha_1 = 1 on (0, pi), so Psi_1 agrees here.
        assert_eq!(energy_psi1(&st, &spec), 2.0);
        let st2 = ExtendedState::new(SpectralField::mode(64, 2, 1.0), spec.zero_history());
        assert_eq!(energy_psi1(&st2, &spec), 2.0);
        assert!(energy_psi0_tilde(&st, &spec, 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_and_reduction_agree_on_constant_past() {
        let exp = SystemSpec::reference(0.25, MemoryBackend::ExpReduction).unwrap();
        let grid = exp.with_backend(MemoryBackend::Grid).unwrap();
        let u0 = SpectralField::new((0..64).map(|k| 0.5 / (k + 1) as f64).collect()).unwrap();
        let a = ExtendedState::constant_past(&exp, u0.clone()).unwrap();
        let b = ExtendedState::constant_past(&grid, u0).unwrap();
        let (x, y) = (energy_psi0(&a, &exp), energy_psi0(&b, &grid));
        assert!((x - y).abs() < 1e-3 * x, "{x} vs {y}");
    }
}
