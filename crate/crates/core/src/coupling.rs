//! Distance-like functions on the extended space and Monte-Carlo coupling bounds.
//!
//! `d_N(U, V) = N ||U - V|| ^ 1` and
//! `d_{N,beta}(U, V) = sqrt(d_N (1 + exp(beta Psi_0(U)) + exp(beta Psi_0(V))))`.
//! The marginal versions use `||u - v||_H` and the weight `exp(beta ||u||^2 / 2)`.
//! Any coupling of two laws gives an upper bound on the matching Wasserstein
//! distance, and every estimate here is such an upper bound.

use crate::dynamics::{energy_psi0, CoupledPair, ExtendedState, MemoryState, SystemSpec};
use crate::error::CouplingError;
use crate::memory::weighted_norm_sq;

/// Exponents above this are rejected instead of overflowing.
pub const EXP_GUARD: f64 = 700.0;

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959963984540054;

/// Whether distances see the full state or only `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Extended,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceSpec {
    n: f64,
    beta: f64,
    level: Level,
}

impl DistanceSpec {
    pub fn new(n: f64, beta: f64, level: Level) -> Result<Self, CouplingError> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(CouplingError::Params(format!("N must be positive, got {n}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(CouplingError::Params(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { n, beta, level })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn level(&self) -> Level {
        self.level
    }

    /// Same cap scale and level with a different weight.
    pub fn with_beta(&self, beta: f64) -> Result<Self, CouplingError> {
        Self::new(self.n, beta, self.level)
    }

    pub fn marginal(&self) -> Self {
        Self { level: Level::Marginal, ..*self }
    }
}

/// The three numbers every distance is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    /// `||U - V||` at the chosen level.
    pub separation: f64,
    /// `Psi_0(U)`, or `||u||^2 / 2` at the marginal level.
    pub energy_a: f64,
    pub energy_b: f64,
}

fn history_difference_sq(a: &MemoryState, b: &MemoryState, spec: &SystemSpec) -> Result<f64, CouplingError> {
    match (a, b) {
        (MemoryState::None, MemoryState::None) => Ok(0.0),
        (MemoryState::Grid(x), MemoryState::Grid(y)) => {
            let grid = spec.grid().ok_or(CouplingError::DifferenceUnavailable)?;
            weighted_norm_sq(&x.sub(y), 0, grid, &spec.domain).map_err(|e| CouplingError::Dynamics(e.into()))
        }
        // The closure stores quadratic moments, which do not determine the moments of a difference.
        _ => Err(CouplingError::DifferenceUnavailable),
    }
}

impl PairGeometry {
    /// From two states. Extended distances need grid histories (or none).
    pub fn of_states(a: &ExtendedState, b: &ExtendedState, spec: &SystemSpec, level: Level) -> Result<Self, CouplingError> {
        let du = a.u.sub(&b.u).norm_sq();
        match level {
            Level::Marginal => Ok(Self { separation: du.sqrt(), energy_a: 0.5 * a.u.norm_sq(), energy_b: 0.5 * b.u.norm_sq() }),
            Level::Extended => {
                let dh = history_difference_sq(&a.memory, &b.memory, spec)?;
                Ok(Self { separation: (du + dh).sqrt(), energy_a: energy_psi0(a, spec), energy_b: energy_psi0(b, spec) })
            }
        }
    }

    /// From a pair whose history difference is tracked.
    pub fn of_pair(pair: &CoupledPair, spec: &SystemSpec, level: Level) -> Result<Self, CouplingError> {
        match level {
            Level::Marginal => Self::of_states(&pair.a, &pair.b, spec, level),
            Level::Extended => {
                let d2 = pair.difference_h0_sq(spec).ok_or(CouplingError::DifferenceUnavailable)?;
                Ok(Self { separation: d2.sqrt(), energy_a: energy_psi0(&pair.a, spec), energy_b: energy_psi0(&pair.b, spec) })
            }
        }
    }

    pub fn d_n(&self, d: &DistanceSpec) -> f64 {
        (d.n * self.separation).min(1.0)
    }

    pub fn d_nbeta(&self, d: &DistanceSpec) -> Result<f64, CouplingError> {
        let weight = |e: f64| {
            let x = d.beta * e;
            if x > EXP_GUARD {
                Err(CouplingError::Overflow(x))
            } else {
                Ok(x.exp())
            }
        };
        Ok((self.d_n(d) * (1.0 + weight(self.energy_a)? + weight(self.energy_b)?)).sqrt())
    }
}

/// `N ||U - V|| ^ 1`.
pub fn dist_dn(a: &ExtendedState, b: &ExtendedState, spec: &SystemSpec, d: &DistanceSpec) -> Result<f64, CouplingError> {
    Ok(PairGeometry::of_states(a, b, spec, d.level)?.d_n(d))
}

/// `sqrt(d_N (1 + e^{beta Psi_0(U)} + e^{beta Psi_0(V)}))`.
pub fn dist_dnbeta(a: &ExtendedState, b: &ExtendedState, spec: &SystemSpec, d: &DistanceSpec) -> Result<f64, CouplingError> {
    PairGeometry::of_states(a, b, spec, d.level)?.d_nbeta(d)
}

pub fn pair_dn(pair: &CoupledPair, spec: &SystemSpec, d: &DistanceSpec) -> Result<f64, CouplingError> {
    Ok(PairGeometry::of_pair(pair, spec, d.level)?.d_n(d))
}

pub fn pair_dnbeta(pair: &CoupledPair, spec: &SystemSpec, d: &DistanceSpec) -> Result<f64, CouplingError> {
    PairGeometry::of_pair(pair, spec, d.level)?.d_nbeta(d)
}

/// Sample mean with a 95% normal half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_samples(values: &[f64]) -> Result<Self, CouplingError> {
        if values.len() < 2 {
            return Err(CouplingError::TooFewSamples { need: 2, got: values.len() });
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self { mean, half_width: Z95 * (var / n).sqrt(), n: values.len() })
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.half_width / Z95
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// Upper bound on the Wasserstein distance of the metric from paired samples of a coupling.
pub fn wasserstein_upper<T>(
    pairs: &[(T, T)],
    metric: impl Fn(&T, &T) -> Result<f64, CouplingError>,
) -> Result<MeanEstimate, CouplingError> {
    let values = pairs.iter().map(|(x, y)| metric(x, y)).collect::<Result<Vec<_>, _>>()?;
    MeanEstimate::from_samples(&values)
}

/// Total-variation bounds implied by a Girsanov shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvBound {
    /// `int ||beta||^2 dt` of the ensemble mean.
    pub budget: f64,
    /// `min(1, sqrt(budget) / 2)`.
    pub pinsker: f64,
    /// `1 - exp(-budget / 2) / 2`.
    pub entropy: f64,
}

/// Bounds from a uniformly sampled series of `E ||beta(t_i)||^2`, integrated by the left rule
/// (each sample holds over the step that follows it).
pub fn tv_bound_from_shift(series: &[f64], dt: f64) -> Result<TvBound, CouplingError> {
    if !(dt > 0.0) {
        return Err(CouplingError::Params(format!("time step must be positive, got {dt}")));
    }
    if series.iter().any(|v| !(*v >= 0.0)) {
        return Err(CouplingError::Params("shift series must be nonnegative".into()));
    }
    Ok(TvBound::from_budget(dt * series.iter().sum::<f64>()))
}

impl TvBound {
    /// Bounds from an already integrated budget `E int ||beta||^2 dt`.
    pub fn from_budget(budget: f64) -> Self {
        Self { budget, pinsker: (0.5 * budget.sqrt()).min(1.0), entropy: 1.0 - 0.5 * (-0.5 * budget).exp() }
    }
}

/// Both sides of `d_{N,beta}(u, v) <= d_{N,beta}(U, V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingCheck {
    pub marginal: f64,
    pub extended: f64,
}

impl OrderingCheck {
    pub fn holds(&self) -> bool {
        self.marginal <= self.extended * (1.0 + 1e-12)
    }
}

pub fn check_metric_ordering(a: &ExtendedState, b: &ExtendedState, spec: &SystemSpec, d: &DistanceSpec) -> Result<OrderingCheck, CouplingError> {
    let marginal = dist_dnbeta(a, b, spec, &d.marginal())?;
    let extended = dist_dnbeta(a, b, spec, &DistanceSpec { level: Level::Extended, ..*d })?;
    Ok(OrderingCheck { marginal, extended })
}

/// Both sides of `d_{N,beta/2}(U1, U3) <= C (d_{N,beta}(U1, U2) + d_{N,beta}(U2, U3))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
}

impl TriangleCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12)
    }
}

/// `C = max{2, e^{beta / (2 N^2)}}`, the square root of the larger of the two case constants.
pub fn triangle_constant(d: &DistanceSpec) -> f64 {
    (d.beta / (2.0 * d.n * d.n)).exp().max(2.0)
}

pub fn check_triangle(
    u1: &ExtendedState,
    u2: &ExtendedState,
    u3: &ExtendedState,
    spec: &SystemSpec,
    d: &DistanceSpec,
) -> Result<TriangleCheck, CouplingError> {
    let half = d.with_beta(d.beta / 2.0)?;
    let lhs = dist_dnbeta(u1, u3, spec, &half)?;
    let constant = triangle_constant(d);
    let rhs = constant * (dist_dnbeta(u1, u2, spec, d)? + dist_dnbeta(u2, u3, spec, d)?);
    Ok(TriangleCheck { lhs, rhs, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::MemoryBackend;
    use crate::spectral::SpectralField;

    fn spec() -> SystemSpec {
        SystemSpec::reference(1.0, MemoryBackend::Memoryless).unwrap()
    }

    fn state(c: f64) -> ExtendedState {
        ExtendedState::new(SpectralField::mode(64, 1, c), MemoryState::None)
    }

    #[test]
    fn dn_examples() {
        let s = spec();
        let d = DistanceSpec::new(2.0, 0.05, Level::Extended).unwrap();
        assert_eq!(dist_dn(&state(0.3), &state(0.3), &s, &d).unwrap(), 0.0);
        assert_eq!(dist_dn(&state(0.0), &state(1.5), &s, &d).unwrap(), 1.0);
        assert!((dist_dn(&state(0.0), &state(0.25), &s, &d).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dnbeta_examples() {
        let s = spec();
        let d = DistanceSpec::new(1.0, 0.05, Level::Extended).unwrap();
        assert_eq!(dist_dnbeta(&state(0.0), &state(0.0), &s, &d).unwrap(), 0.0);
        // d_N = 1 with both energies near zero gives sqrt(3) in the limit of tiny beta.
        let tiny = DistanceSpec::new(1e9, 1e-300, Level::Extended).unwrap();
        assert!((dist_dnbeta(&state(0.0), &state(1e-6), &s, &tiny).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        let big = DistanceSpec::new(1.0, 1e3, Level::Extended).unwrap();
        assert!(matches!(dist_dnbeta(&state(0.0), &state(2.0), &s, &big), Err(CouplingError::Overflow(_))));
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_bound_from_shift(&[0.0; 10], 0.1).unwrap().pinsker, 0.0);
        let mut s = vec![4.0; 100];
        s.extend(vec![0.0; 100]);
        assert_eq!(tv_bound_from_shift(&s, 0.01).unwrap().pinsker, 1.0);
        let b = tv_bound_from_shift(&[0.04; 100], 0.01).unwrap();
        assert!((b.pinsker - 0.1).abs() < 1e-12);
        assert!((b.entropy - (1.0 - 0.5 * (-0.02f64).exp())).abs() < 1e-12);
        assert!(tv_bound_from_shift(&[-1.0], 0.1).is_err());
    }

    #[test]
    fn estimator_examples() {
        let pairs: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        let e = wasserstein_upper(&pairs, |a, b| Ok((a - b).abs())).unwrap();
        assert_eq!((e.mean, e.half_width), (0.0, 0.0));
        let e = wasserstein_upper(&pairs, |_, _| Ok(0.3)).unwrap();
        assert!((e.mean - 0.3).abs() < 1e-15 && e.half_width < 1e-15);
        assert!(wasserstein_upper(&pairs[..1], |_, _| Ok(0.0)).is_err());
    }

    #[test]
    fn ordering_and_triangle_on_simple_states() {
        let s = spec();
        let d = DistanceSpec::new(1.0, 0.05, Level::Extended).unwrap();
        let c = check_metric_ordering(&state(0.2), &state(0.2), &s, &d).unwrap();
        assert_eq!((c.marginal, c.extended), (0.0, 0.0));
        let t = check_triangle(&state(0.5), &state(-1.0), &state(0.5), &s, &d).unwrap();
        assert_eq!(t.lhs, 0.0);
        assert_eq!(t.constant, 2.0);
    }

    #[test]
    fn exp_closure_states_need_a_tracked_pair() {
        let s = SystemSpec::reference(1.0, MemoryBackend::ExpReduction).unwrap();
        let d = DistanceSpec::new(1.0, 0.05, Level::Extended).unwrap();
        let a = ExtendedState::zero(&s);
        assert_eq!(dist_dn(&a, &a, &s, &d), Err(CouplingError::DifferenceUnavailable));
        let pair = CoupledPair::constant_pasts(&s, SpectralField::mode(64, 1, 1.0), SpectralField::zeros(64)).unwrap();
        // ||U - V||^2 = 1 + alpha_1 * 2 / r with r = 1.
        assert!((pair_dn(&pair, &s, &DistanceSpec::new(0.1, 0.05, Level::Extended).unwrap()).unwrap() - 0.1 * 3f64.sqrt()).abs() < 1e-12);
    }
}
