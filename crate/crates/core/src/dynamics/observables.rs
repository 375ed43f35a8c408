//! Named scalar observables of a state.

use std::fmt;
use std::str::FromStr;

use super::energy::{energy_psi0, energy_psi1};
use super::{ExtendedState, SystemSpec};
use crate::spectral::PhysicalField;

/// The fixed registry of recorded observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observable {
    Psi0,
    Psi1,
    NormH,
    NormH1,
    Mode1,
    IntU3,
    NormHSq,
    Mode1Sq,
    IntU4,
}

impl Observable {
    pub const ALL: [Observable; 9] = [
        Observable::Psi0,
        Observable::Psi1,
        Observable::NormH,
        Observable::NormH1,
        Observable::Mode1,
        Observable::IntU3,
        Observable::NormHSq,
        Observable::Mode1Sq,
        Observable::IntU4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Psi0 => "psi0",
            Observable::Psi1 => "psi1",
            Observable::NormH => "norm_h",
            Observable::NormH1 => "norm_h1",
            Observable::Mode1 => "mode1",
            Observable::IntU3 => "int_u3",
            Observable::NormHSq => "norm_h_sq",
            Observable::Mode1Sq => "mode1_sq",
            Observable::IntU4 => "int_u4",
        }
    }

    /// True for observables that only read `u`.
    pub fn is_marginal(self) -> bool {
        !matches!(self, Observable::Psi0 | Observable::Psi1)
    }

    pub fn evaluate(self, state: &ExtendedState, spec: &SystemSpec) -> f64 {
        let d = &spec.domain;
        let u = state.u.coeffs();
        let moment = |p: i32| {
            let mut v = vec![0.0; d.n_quad()];
            d.transform().synthesize_into(u, &mut v);
            d.physical_moment(&PhysicalField::new(v), p)
        };
        match self {
            Observable::Psi0 => energy_psi0(state, spec),
            Observable::Psi1 => energy_psi1(state, spec),
            Observable::NormH => state.u.norm_sq().sqrt(),
            Observable::NormH1 => d.sobolev_norm_sq(u, 1.0).sqrt(),
            Observable::Mode1 => u[0],
            Observable::IntU3 => moment(3),
            Observable::NormHSq => state.u.norm_sq(),
            Observable::Mode1Sq => u[0] * u[0],
            Observable::IntU4 => moment(4),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Observable::ALL.into_iter().find(|o| o.name() == s).ok_or_else(|| format!("unknown observable `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::MemoryBackend;
    use crate::spectral::SpectralField;

    #[test]
    fn names_round_trip() {
        for o in Observable::ALL {
            assert_eq!(o.name().parse::<Observable>().unwrap(), o);
        }
        assert!("nope".parse::<Observable>().is_err());
    }

    #[test]
    fn single_mode_values() {
        let spec = SystemSpec::reference(1.0, MemoryBackend::ExpReduction).unwrap();
        let st = ExtendedState::new(SpectralField::mode(64, 1, 2.0), spec.zero_history());
        assert_eq!(Observable::Mode1.evaluate(&st, &spec), 2.0);
        assert_eq!(Observable::NormHSq.evaluate(&st, &spec), 4.0);
        // int (2 sqrt(2/pi) sin x)^4 dx over (0, pi) = 16 (4/pi^2)(3 pi / 8) = 24 / pi
        let i4 = Observable::IntU4.evaluate(&st, &spec);
        assert!((i4 - 24.0 / std::f64::consts::PI).abs() < 1e-10, "{i4}");
        // Odd moments of a symmetric single-mode profile: int sin^3 = 4/3.
        let i3 = Observable::IntU3.evaluate(&st, &spec);
        let exact = 8.0 * (2.0 / std::f64::consts::PI).powf(1.5) * 4.0 / 3.0;
        assert!((i3 - exact).abs() < 1e-6 * exact, "{i3} vs {exact}");
    }
}
