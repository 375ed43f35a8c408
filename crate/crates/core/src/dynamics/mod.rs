//! Time integration of the memory system, its memoryless limit and coupled pairs.
//!
//! The memory system in the eigenbasis reads
//!
//! ```text
//! du_k = [-kappa alpha_k u_k - (1 - kappa) alpha_k int mu_eps eta_k ds + phi(u)_k] dt + q_k dB_k,
//! d_t eta = -d_s eta + u,  eta(t, 0) = 0,
//! ```
//!
//! and the memoryless limit replaces the first two terms by `-alpha_k u_k`.

mod energy;
mod observables;
mod rng;
mod simulate;
mod stepper;

pub(crate) use energy::history_norm_sq;
pub use energy::{energy_psi0, energy_psi0_tilde, energy_psi1, h0_norm_sq};
pub use observables::Observable;
pub use rng::NoiseStream;
pub use simulate::{simulate, Trajectory};
pub use stepper::{
    drift_memory, girsanov_shift, step_memory, step_memoryless, step_nudged_pair, CoupledPair, Coupling, PairStepper,
    Stepper, SystemKind,
};

use crate::error::DynamicsError;
use crate::memory::{init_history_from_past, ExpMemoryState, HistoryField, HistoryGrid, KernelSpec};
use crate::spectral::{DomainSpec, NoiseSpec, PotentialSpec, SpectralField};

/// Largest time step accepted for the explicit nonlinear terms.
pub const MAX_DT: f64 = 1e-2;

/// How the history is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryBackend {
    /// Upwind transport on a memory-age grid.
    Grid,
    /// Exact moment closure for exponential kernels.
    ExpReduction,
    /// No history at all.
    Memoryless,
}

/// Everything that defines one simulated system.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub domain: DomainSpec,
    pub kappa: f64,
    pub kernel: KernelSpec,
    pub potential: PotentialSpec,
    pub noise: NoiseSpec,
    pub backend: MemoryBackend,
    grid: Option<HistoryGrid>,
}

impl SystemSpec {
    pub fn new(
        domain: DomainSpec,
        kappa: f64,
        kernel: KernelSpec,
        potential: PotentialSpec,
        noise: NoiseSpec,
        backend: MemoryBackend,
    ) -> Result<Self, DynamicsError> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(DynamicsError::System(format!("kappa must lie in (0, 1), got {kappa}")));
        }
        if noise.n_modes() != domain.n_modes() {
            return Err(DynamicsError::System(format!(
                "noise has {} modes but the domain has {}",
                noise.n_modes(),
                domain.n_modes()
            )));
        }
        if backend == MemoryBackend::ExpReduction && !kernel.is_exponential() {
            return Err(DynamicsError::System("the exponential reduction needs an exponential kernel".into()));
        }
        // Uniform ages keep the upwind step usable at the default time step.
        let grid = match backend {
            MemoryBackend::Grid => {
                let scale = kernel.epsilon() / kernel.delta();
                Some(HistoryGrid::uniform(&kernel, scale / 16.0, 25.0 * scale)?)
            }
            _ => None,
        };
        Ok(Self { domain, kappa, kernel, potential, noise, backend, grid })
    }

    /// The reference configuration: `L = pi`, 64 modes, Allen-Cahn, `kappa = 1/2`,
    /// `q_k = 0.25 / k^2`, `n_bar = 2`, exponential kernel with `delta = 1`.
    pub fn reference(epsilon: f64, backend: MemoryBackend) -> Result<Self, DynamicsError> {
        let domain = DomainSpec::with_modes(std::f64::consts::PI, 64)?;
        let kernel = KernelSpec::exponential(1.0)?.with_epsilon(epsilon)?;
        let noise = NoiseSpec::power_law(64, 0.25, 2.0, 2)?;
        Self::new(domain, 0.5, kernel, PotentialSpec::allen_cahn(), noise, backend)
    }

    /// Replaces the age grid used by the grid backend.
    pub fn with_grid(mut self, grid: HistoryGrid) -> Self {
        self.grid = Some(grid);
        self
    }

    /// The same system at a different memory scale; a custom age grid is rebuilt at the default.
    pub fn at_epsilon(&self, epsilon: f64) -> Result<Self, DynamicsError> {
        let kernel = self.kernel.with_epsilon(epsilon)?;
        Self::new(self.domain.clone(), self.kappa, kernel, self.potential.clone(), self.noise.clone(), self.backend)
    }

    pub fn with_backend(&self, backend: MemoryBackend) -> Result<Self, DynamicsError> {
        let mut s = Self::new(self.domain.clone(), self.kappa, self.kernel.clone(), self.potential.clone(), self.noise.clone(), backend)?;
        if backend == MemoryBackend::Grid && self.grid.is_some() {
            s.grid = self.grid.clone();
        }
        Ok(s)
    }

    pub fn with_potential(&self, potential: PotentialSpec) -> Self {
        let mut s = self.clone();
        s.potential = potential;
        s
    }

    pub fn with_noise(&self, noise: NoiseSpec) -> Result<Self, DynamicsError> {
        let mut s = self.clone();
        if noise.n_modes() != s.domain.n_modes() {
            return Err(DynamicsError::System("noise mode count does not match the domain".into()));
        }
        s.noise = noise;
        Ok(s)
    }

    pub fn grid(&self) -> Option<&HistoryGrid> {
        self.grid.as_ref()
    }

    pub fn n_modes(&self) -> usize {
        self.domain.n_modes()
    }

    pub fn epsilon(&self) -> f64 {
        self.kernel.epsilon()
    }

    /// `kappa alpha_{n_bar}`, the nudging strength.
    pub fn nudge_strength(&self) -> f64 {
        self.kappa * self.domain.alpha(self.noise.n_bar() - 1)
    }

    /// Checks `kappa alpha_{n_bar} > a_phi`, needed by the nudged coupling.
    pub fn check_nudging(&self) -> Result<(), DynamicsError> {
        let lhs = self.nudge_strength();
        if lhs <= self.potential.a_phi() {
            return Err(DynamicsError::NudgeCondition { lhs, a_phi: self.potential.a_phi() });
        }
        if let Some(k) = self.noise.q()[..self.noise.n_bar()].iter().position(|&q| q <= 0.0) {
            return Err(DynamicsError::ZeroForcing { k: k + 1 });
        }
        Ok(())
    }

    /// Contraction rate `min{2 (kappa alpha_{n_bar} - a_phi), delta}` of the nudged pair.
    pub fn contraction_rate(&self) -> f64 {
        (2.0 * (self.nudge_strength() - self.potential.a_phi())).min(self.kernel.delta())
    }

    /// True when the collocation grid resolves `phi(u)` exactly on the retained modes.
    pub fn is_dealiased(&self) -> bool {
        self.domain.n_quad() >= self.potential.min_quadrature(self.domain.n_modes())
    }

    /// A history of the configured representation built from a past `r -> u(-r)`.
    pub fn history_from_past(&self, u_past: impl Fn(f64) -> SpectralField) -> MemoryState {
        let n = self.n_modes();
        match self.backend {
            MemoryBackend::Grid => {
                MemoryState::Grid(init_history_from_past(u_past, n, self.grid.as_ref().expect("grid backend has a grid")))
            }
            MemoryBackend::ExpReduction => MemoryState::Exp(ExpMemoryState::from_past(u_past, n, &self.kernel)),
            MemoryBackend::Memoryless => MemoryState::None,
        }
    }

    /// A history of the configured representation for the constant past `u(-r) = u0`.
    pub fn history_constant_past(&self, u0: &SpectralField) -> Result<MemoryState, DynamicsError> {
        Ok(match self.backend {
            MemoryBackend::ExpReduction => MemoryState::Exp(ExpMemoryState::constant_past(u0, &self.kernel)?),
            _ => self.history_from_past(|_| u0.clone()),
        })
    }

    pub fn zero_history(&self) -> MemoryState {
        match self.backend {
            MemoryBackend::Grid => MemoryState::Grid(HistoryField::zeros(self.n_modes(), self.grid.as_ref().map_or(0, |g| g.len()))),
            MemoryBackend::ExpReduction => MemoryState::Exp(ExpMemoryState::zeros(self.n_modes())),
            MemoryBackend::Memoryless => MemoryState::None,
        }
    }
}

/// History component of an extended state.
#[derive(Debug, Clone, PartialEq)]
pub enum MemoryState {
    Grid(HistoryField),
    Exp(ExpMemoryState),
    None,
}

/// The Markov state `(u, eta)`, or `u` alone for the memoryless system.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    pub u: SpectralField,
    pub memory: MemoryState,
}

impl ExtendedState {
    pub fn new(u: SpectralField, memory: MemoryState) -> Self {
        Self { u, memory }
    }

    pub fn zero(spec: &SystemSpec) -> Self {
        Self { u: SpectralField::zeros(spec.n_modes()), memory: spec.zero_history() }
    }

    /// `u(0) = u0` with history generated by the constant past `u(-r) = u0`.
    pub fn constant_past(spec: &SystemSpec, u0: SpectralField) -> Result<Self, DynamicsError> {
        let memory = spec.history_constant_past(&u0)?;
        Ok(Self { u: u0, memory })
    }

    pub fn from_past(spec: &SystemSpec, u0: SpectralField, u_past: impl Fn(f64) -> SpectralField) -> Self {
        Self { u: u0, memory: spec.history_from_past(u_past) }
    }

    /// Checks the representation and dimensions against `spec`.
    pub fn check(&self, spec: &SystemSpec) -> Result<(), DynamicsError> {
        let n = spec.n_modes();
        if self.u.len() != n {
            return Err(DynamicsError::State(format!("u has {} modes, expected {n}", self.u.len())));
        }
        match (&self.memory, spec.backend) {
            (MemoryState::Grid(eta), MemoryBackend::Grid) => {
                let g = spec.grid().expect("grid backend has a grid");
                if eta.n_modes() != n || eta.n_nodes() != g.len() {
                    return Err(DynamicsError::State("history grid shape mismatch".into()));
                }
            }
            (MemoryState::Exp(m), MemoryBackend::ExpReduction) => {
                if m.len() != n {
                    return Err(DynamicsError::State("memory length mismatch".into()));
                }
            }
            (MemoryState::None, MemoryBackend::Memoryless) => {}
            _ => return Err(DynamicsError::State("history representation does not match the backend".into())),
        }
        Ok(())
    }
}

/// Time step, seed and recording stride.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub seed: u64,
    pub record_every: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, seed: u64, record_every: usize) -> Result<Self, DynamicsError> {
        let c = Self { dt, seed, record_every };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(DynamicsError::Solver(format!("dt must lie in (0, {MAX_DT}], got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(DynamicsError::Solver("record_every must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { dt: 2e-3, seed: 0, record_every: 1 }
    }
}
