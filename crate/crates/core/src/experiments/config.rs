//! Campaign configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dynamics::{MemoryBackend, Observable, SolverConfig, SystemSpec};
use crate::error::ExperimentError;

/// Smallest ensemble accepted by any campaign.
pub const MIN_ENSEMBLE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Sweep,
    Contraction,
    Moments,
    Ergodicity,
    Invariant,
    Oracles,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Sweep,
        ExperimentKind::Contraction,
        ExperimentKind::Moments,
        ExperimentKind::Ergodicity,
        ExperimentKind::Invariant,
        ExperimentKind::Oracles,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Contraction => "contraction",
            ExperimentKind::Moments => "moments",
            ExperimentKind::Ergodicity => "ergodicity",
            ExperimentKind::Invariant => "invariant",
            ExperimentKind::Oracles => "validate-oracles",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = if s == "oracles" { "validate-oracles" } else { s };
        ExperimentKind::ALL.into_iter().find(|k| k.id() == s).ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Knobs that only some campaigns read.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignParams {
    /// Spectral coefficients of the deterministic initial field; padded with zeros.
    pub initial: Vec<f64>,
    /// Audit times.
    pub checkpoints: Vec<f64>,
    /// Initial separations `||U0 - V0||` for the Girsanov budget.
    pub separations: Vec<f64>,
    /// Initial separation of the two ergodicity ensembles.
    pub ergodic_separation: f64,
    /// Random initial pairs per memory scale in the contraction fit.
    pub n_pairs: usize,
    /// Trajectories per separation in the Girsanov budget.
    pub shift_ensemble: usize,
    /// Horizon of the Girsanov budget integral.
    pub shift_horizon: f64,
    /// Fitting window.
    pub fit_start: f64,
    pub fit_end: f64,
    /// Distance parameters.
    pub cap_n: f64,
    pub beta: f64,
    /// Stationary-regime timing.
    pub burn_in: f64,
    pub window: f64,
    /// Exponential-moment weight and the window where the asymptote is checked.
    pub moment_beta: f64,
    pub moment_start: f64,
    /// Replace the memory system by the memoryless one (sanity mode of the invariant study).
    pub memoryless_both: bool,
    /// Also run the linear memoryless variance check in the invariant study.
    pub linear_check: bool,
}

impl Default for CampaignParams {
    fn default() -> Self {
        Self {
            initial: vec![1.0, 0.5, -0.3],
            checkpoints: vec![1.0, 2.0, 5.0, 10.0],
            separations: vec![1e-2, 1e-1, 1.0, 10.0],
            ergodic_separation: 10.0,
            n_pairs: 10,
            shift_ensemble: 16,
            shift_horizon: 50.0,
            fit_start: 1.0,
            fit_end: 10.0,
            cap_n: 1.0,
            beta: 0.05,
            burn_in: 20.0,
            window: 100.0,
            moment_beta: 0.05,
            moment_start: 20.0,
            memoryless_both: false,
            linear_check: true,
        }
    }
}

/// Everything a campaign needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Base system; each campaign rescales it to the listed memory scales.
    pub system: SystemSpec,
    pub solver: SolverConfig,
    pub epsilons: Vec<f64>,
    pub ensemble: usize,
    pub horizon: f64,
    pub observables: Vec<Observable>,
    pub output: Option<PathBuf>,
    pub workers: usize,
    pub params: CampaignParams,
}

impl ExperimentConfig {
    /// Defaults on the reference system at `dt = 2e-3`, `M = 256`.
    pub fn default_for(kind: ExperimentKind) -> Result<Self, ExperimentError> {
        let system = SystemSpec::reference(1.0, MemoryBackend::ExpReduction)?;
        let coarse = SolverConfig::new(2e-3, 20_240_601, 50)?;
        let (solver, epsilons, horizon, observables) = match kind {
            ExperimentKind::Sweep => {
                (SolverConfig { record_every: 5, ..coarse }, vec![0.2, 0.1, 0.05, 0.025, 0.0125], 1.0, vec![])
            }
            ExperimentKind::Contraction => {
                (SolverConfig { record_every: 10, ..coarse }, vec![1.0, 0.25, 0.0625], 10.0, vec![Observable::Psi0])
            }
            ExperimentKind::Moments => (SolverConfig { record_every: 10, ..coarse }, vec![1.0, 0.25, 0.0625], 100.0, vec![]),
            ExperimentKind::Ergodicity => (coarse, vec![1.0, 0.25, 0.0625], 50.0, Observable::ALL.to_vec()),
            ExperimentKind::Invariant => (
                SolverConfig { record_every: 10, ..coarse },
                vec![0.2, 0.1, 0.05, 0.025, 0.0125],
                120.0,
                vec![Observable::NormHSq, Observable::Mode1Sq, Observable::IntU4],
            ),
            ExperimentKind::Oracles => (coarse, vec![0.25], 2.0, vec![]),
        };
        let mut params = CampaignParams::default();
        if kind == ExperimentKind::Moments {
            params.initial = vec![3.0, 0.0, 1.0];
        }
        let ensemble = match kind {
            ExperimentKind::Invariant => 64,
            ExperimentKind::Oracles => 20,
            _ => 256,
        };
        Ok(Self { kind, system, solver, epsilons, ensemble, horizon, observables, output: None, workers: 1, params })
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.solver.validate()?;
        if self.ensemble < MIN_ENSEMBLE {
            return Err(ExperimentError::Config(format!("ensemble size must be at least {MIN_ENSEMBLE}, got {}", self.ensemble)));
        }
        if self.epsilons.is_empty() {
            return Err(ExperimentError::Config("no memory scales listed".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(ExperimentError::Config(format!("memory scales must lie in (0, 1], got {e}")));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(ExperimentError::Config(format!("horizon must be finite and nonnegative, got {}", self.horizon)));
        }
        if self.workers == 0 {
            return Err(ExperimentError::Config("workers must be positive".into()));
        }
        let p = &self.params;
        if !(p.fit_end > p.fit_start && p.fit_start >= 0.0) {
            return Err(ExperimentError::Config("fit window must satisfy 0 <= start < end".into()));
        }
        if p.initial.len() > self.system.n_modes() {
            return Err(ExperimentError::Config("more initial coefficients than modes".into()));
        }
        Ok(())
    }

    /// The deterministic initial field.
    pub(crate) fn initial_field(&self) -> crate::spectral::SpectralField {
        let mut c = vec![0.0; self.system.n_modes()];
        c[..self.params.initial.len()].copy_from_slice(&self.params.initial);
        crate::spectral::SpectralField::new(c).expect("finite initial coefficients")
    }

    /// Memory scales sorted from largest to smallest.
    pub(crate) fn sorted_epsilons(&self) -> Vec<f64> {
        let mut e = self.epsilons.clone();
        e.sort_by(|a, b| b.total_cmp(a));
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for k in ExperimentKind::ALL {
            let c = ExperimentConfig::default_for(k).unwrap();
            c.validate().unwrap();
            assert_eq!(k.id().parse::<ExperimentKind>().unwrap(), k);
        }
    }

    #[test]
    fn rejects_small_ensembles_and_bad_scales() {
        let mut c = ExperimentConfig::default_for(ExperimentKind::Sweep).unwrap();
        c.ensemble = 8;
        assert!(c.validate().is_err());
        c.ensemble = 16;
        c.epsilons = vec![0.5, 1.5];
        assert!(c.validate().is_err());
    }
}
