//! Semi-implicit Euler-Maruyama steps for single systems and coupled pairs.
//!
//! The stiff term `-kappa alpha_k u_k` (or `-alpha_k u_k` without memory) is
//! implicit; the potential, the memory feedback and any nudge are explicit.
//! The history is advanced with the pre-step `u`.

use super::rng::NoiseStream;
use super::{ExtendedState, MemoryBackend, MemoryState, SolverConfig, SystemSpec};
use crate::error::{DynamicsError, MemoryError};
use crate::memory::{kernel_average, max_transport_dt, transport_step_in_place, ExpMemoryState, ExpStepCoeffs};
use crate::spectral::{DomainSpec, NoiseSpec, SpectralField};

/// Which equation a stepper integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// Splits the Laplacian as `kappa` instantaneous plus `1 - kappa` through the kernel.
    Memory,
    /// Full Laplacian; any history present is the ersatz one driven by `u` and has no feedback.
    Memoryless,
}

const BLOWUP: f64 = 1e12;

/// Precomputed coefficients and scratch space for one system at one time step.
#[derive(Debug, Clone)]
pub struct Stepper {
    spec: SystemSpec,
    kind: SystemKind,
    dt: f64,
    inv_den: Vec<f64>,
    mem_coef: Vec<f64>,
    noise_sd: Vec<f64>,
    exp: Option<ExpStepCoeffs>,
    nudge: f64,
    n_bar: usize,
    xi: Vec<f64>,
    phi: Vec<f64>,
    scratch: Vec<f64>,
    mbuf: Vec<f64>,
    prev: Vec<f64>,
    steps: u64,
}

impl Stepper {
    pub fn new(spec: &SystemSpec, kind: SystemKind, dt: f64) -> Result<Self, DynamicsError> {
        SolverConfig { dt, seed: 0, record_every: 1 }.validate()?;
        if kind == SystemKind::Memory && spec.backend == MemoryBackend::Memoryless {
            return Err(DynamicsError::System("a memory system needs a history backend".into()));
        }
        if let (MemoryBackend::Grid, Some(g)) = (spec.backend, spec.grid()) {
            let max_dt = max_transport_dt(g);
            if dt > max_dt * (1.0 + 1e-12) {
                return Err(MemoryError::Cfl { dt, max_dt }.into());
            }
        }
        let alphas = spec.domain.alphas();
        let lin = if kind == SystemKind::Memory { spec.kappa } else { 1.0 };
        let inv_den = alphas.iter().map(|a| 1.0 / (1.0 + lin * a * dt)).collect();
        let mem_coef = match kind {
            SystemKind::Memory => alphas.iter().map(|a| (1.0 - spec.kappa) * a * dt).collect(),
            SystemKind::Memoryless => vec![0.0; alphas.len()],
        };
        let noise_sd = spec.noise.q().iter().map(|q| q * dt.sqrt()).collect();
        let exp = match spec.backend {
            MemoryBackend::ExpReduction => Some(ExpStepCoeffs::new(&spec.kernel, dt)?),
            _ => None,
        };
        let n = spec.n_modes();
        Ok(Self {
            spec: spec.clone(),
            kind,
            dt,
            inv_den,
            mem_coef,
            noise_sd,
            exp,
            nudge: spec.nudge_strength(),
            n_bar: spec.noise.n_bar(),
            xi: vec![0.0; n],
            phi: vec![0.0; n],
            scratch: vec![0.0; spec.domain.n_quad()],
            mbuf: vec![0.0; n],
            prev: vec![0.0; n],
            steps: 0,
        })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time elapsed since construction or the last [`Stepper::reset_clock`].
    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn reset_clock(&mut self) {
        self.steps = 0;
    }

    /// One step driven by fresh normals from `noise`, consumed mode by mode.
    pub fn step(&mut self, state: &mut ExtendedState, noise: &mut NoiseStream) -> Result<(), DynamicsError> {
        let mut xi = std::mem::take(&mut self.xi);
        noise.fill_normals(&mut xi);
        let r = self.advance(state, &xi, None);
        self.xi = xi;
        r
    }

    /// One step with given standard normals `xi`.
    pub fn step_with_normals(&mut self, state: &mut ExtendedState, xi: &[f64]) -> Result<(), DynamicsError> {
        self.advance(state, xi, None)
    }

    /// Core update. `target` adds the nudge `kappa alpha_nbar (target - u)` on modes `<= n_bar`.
    fn advance(&mut self, state: &mut ExtendedState, xi: &[f64], target: Option<&[f64]>) -> Result<(), DynamicsError> {
        let n = self.inv_den.len();
        if state.u.len() != n || xi.len() != n {
            return Err(DynamicsError::State(format!("expected {n} modes")));
        }
        let dt = self.dt;
        self.spec.domain.apply_potential_into(state.u.coeffs(), &self.spec.potential, &mut self.scratch, &mut self.phi);
        // Kernel average of the history; only the memory system feeds it back.
        match (&state.memory, self.kind) {
            (MemoryState::Exp(m), SystemKind::Memory) => self.mbuf.copy_from_slice(m.m()),
            (MemoryState::Grid(eta), SystemKind::Memory) => {
                let g = self.spec.grid().ok_or_else(|| DynamicsError::State("grid history without a grid".into()))?;
                self.mbuf.copy_from_slice(&kernel_average(eta, g));
            }
            (MemoryState::None, SystemKind::Memory) => {
                return Err(DynamicsError::State("memory system without history".into()));
            }
            (_, SystemKind::Memoryless) => {}
        }
        self.prev.copy_from_slice(state.u.coeffs());
        let u = state.u.coeffs_mut();
        for k in 0..n {
            let mut rhs = u[k] + dt * self.phi[k] - self.mem_coef[k] * self.mbuf[k] + self.noise_sd[k] * xi[k];
            if let Some(t) = target {
                if k < self.n_bar {
                    rhs += dt * self.nudge * (t[k] - u[k]);
                }
            }
            u[k] = rhs * self.inv_den[k];
        }
        match &mut state.memory {
            MemoryState::Exp(m) => {
                let c = self.exp.as_ref().ok_or_else(|| DynamicsError::State("exponential history on a non-exponential backend".into()))?;
                m.step_in_place(&self.prev, c);
            }
            MemoryState::Grid(eta) => {
                let g = self.spec.grid().ok_or_else(|| DynamicsError::State("grid history without a grid".into()))?;
                transport_step_in_place(eta, &self.prev, dt, g)?;
            }
            MemoryState::None => {}
        }
        self.steps += 1;
        if state.u.coeffs().iter().any(|c| !c.is_finite() || c.abs() > BLOWUP) {
            return Err(DynamicsError::Diverged(self.time()));
        }
        Ok(())
    }
}

/// How the two members of a pair are driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Two copies of the memory system on one Brownian path.
    Synchronous,
    /// The second copy is nudged toward the first on the low modes.
    Nudged,
    /// Memory system against the memoryless system with its ersatz history.
    Sweep,
}

/// Two states plus the exact kernel moments of their history difference.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPair {
    pub a: ExtendedState,
    pub b: ExtendedState,
    gap: Option<ExpMemoryState>,
}

impl CoupledPair {
    /// Pair whose history difference is tracked from `gap`; `None` disables tracking.
    pub fn new(a: ExtendedState, b: ExtendedState, gap: Option<ExpMemoryState>) -> Self {
        Self { a, b, gap }
    }

    /// Both members share one history, so the difference starts at zero.
    pub fn shared_history(a: ExtendedState, b: ExtendedState, spec: &SystemSpec) -> Self {
        let gap = spec.kernel.is_exponential().then(|| ExpMemoryState::zeros(spec.n_modes()));
        Self { a, b, gap }
    }

    /// Constant pasts `u0` and `v0`, with histories `s u0` and `s v0`.
    pub fn constant_pasts(spec: &SystemSpec, u0: SpectralField, v0: SpectralField) -> Result<Self, DynamicsError> {
        let gap = if spec.kernel.is_exponential() {
            Some(ExpMemoryState::constant_past(&u0.sub(&v0), &spec.kernel)?)
        } else {
            None
        };
        let a = ExtendedState::constant_past(spec, u0)?;
        let b = ExtendedState::constant_past(spec, v0)?;
        Ok(Self { a, b, gap })
    }

    pub fn gap(&self) -> Option<&ExpMemoryState> {
        self.gap.as_ref()
    }

    /// `||eta_a - eta_b||^2` of order `beta`, from the tracker or the grid difference.
    pub fn history_gap_sq(&self, beta: u8, spec: &SystemSpec) -> Option<f64> {
        if let Some(g) = &self.gap {
            return Some(g.norm_sq(beta, &spec.domain));
        }
        match (&self.a.memory, &self.b.memory, spec.grid()) {
            (MemoryState::Grid(x), MemoryState::Grid(y), Some(grid)) => {
                crate::memory::weighted_norm_sq(&x.sub(y), beta, grid, &spec.domain).ok()
            }
            (MemoryState::None, MemoryState::None, _) => Some(0.0),
            _ => None,
        }
    }

    /// `||U_a - U_b||^2` in the extended energy space.
    pub fn difference_h0_sq(&self, spec: &SystemSpec) -> Option<f64> {
        let du = self.a.u.sub(&self.b.u).norm_sq();
        self.history_gap_sq(0, spec).map(|h| du + h)
    }

    /// `Psi_0(U_a - U_b)`.
    pub fn difference_psi0(&self, spec: &SystemSpec) -> Option<f64> {
        let du = self.a.u.sub(&self.b.u).norm_sq();
        self.history_gap_sq(0, spec).map(|h| 0.5 * du + 0.5 * (1.0 - spec.kappa) * h)
    }
}

/// Advances a [`CoupledPair`] under one of the [`Coupling`] rules.
#[derive(Debug, Clone)]
pub struct PairStepper {
    a: Stepper,
    b: Stepper,
    coupling: Coupling,
    gap: Option<ExpStepCoeffs>,
    xi: Vec<f64>,
    xi_b: Vec<f64>,
    z: Vec<f64>,
}

impl PairStepper {
    pub fn new(spec: &SystemSpec, coupling: Coupling, dt: f64) -> Result<Self, DynamicsError> {
        if coupling == Coupling::Nudged {
            spec.check_nudging()?;
        }
        let kind_b = if coupling == Coupling::Sweep { SystemKind::Memoryless } else { SystemKind::Memory };
        let a = Stepper::new(spec, SystemKind::Memory, dt)?;
        let b = Stepper::new(spec, kind_b, dt)?;
        let gap = if spec.kernel.is_exponential() { Some(ExpStepCoeffs::new(&spec.kernel, dt)?) } else { None };
        let n = spec.n_modes();
        Ok(Self { a, b, coupling, gap, xi: vec![0.0; n], xi_b: vec![0.0; n], z: vec![0.0; n] })
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn spec(&self) -> &SystemSpec {
        self.a.spec()
    }

    pub fn time(&self) -> f64 {
        self.a.time()
    }

    pub fn dt(&self) -> f64 {
        self.a.dt()
    }

    /// One step with a single draw shared by both members.
    pub fn step(&mut self, pair: &mut CoupledPair, noise: &mut NoiseStream) -> Result<(), DynamicsError> {
        let mut xi = std::mem::take(&mut self.xi);
        noise.fill_normals(&mut xi);
        let r = self.advance(pair, &xi, None);
        self.xi = xi;
        r
    }

    /// One step where each member reads its own stream; equal addresses give a shared path
    /// whose equality is visible in the stream checksums.
    pub fn step_separate(&mut self, pair: &mut CoupledPair, noise_a: &mut NoiseStream, noise_b: &mut NoiseStream) -> Result<(), DynamicsError> {
        let mut xi = std::mem::take(&mut self.xi);
        let mut xi_b = std::mem::take(&mut self.xi_b);
        noise_a.fill_normals(&mut xi);
        noise_b.fill_normals(&mut xi_b);
        let r = self.advance(pair, &xi, Some(&xi_b));
        self.xi = xi;
        self.xi_b = xi_b;
        r
    }

    fn advance(&mut self, pair: &mut CoupledPair, xi: &[f64], xi_b: Option<&[f64]>) -> Result<(), DynamicsError> {
        for ((z, a), b) in self.z.iter_mut().zip(pair.a.u.coeffs()).zip(pair.b.u.coeffs()) {
            *z = a - b;
        }
        let target = (self.coupling == Coupling::Nudged).then(|| pair.a.u.clone());
        self.a.advance(&mut pair.a, xi, None)?;
        self.b.advance(&mut pair.b, xi_b.unwrap_or(xi), target.as_ref().map(|t| t.coeffs()))?;
        if let (Some(g), Some(c)) = (pair.gap.as_mut(), self.gap.as_ref()) {
            g.step_in_place(&self.z, c);
        }
        Ok(())
    }
}

/// Drift of `u` in the memory system, `-kappa alpha_k u_k - (1 - kappa) alpha_k m_k + <phi(u), e_k>`.
pub fn drift_memory(state: &ExtendedState, spec: &SystemSpec) -> Result<SpectralField, DynamicsError> {
    let d = &spec.domain;
    let g = match (&state.memory, spec.backend) {
        (MemoryState::Exp(m), _) => m.drift(d),
        (MemoryState::Grid(eta), MemoryBackend::Grid) => {
            crate::memory::memory_drift_grid(eta, spec.grid().expect("grid backend has a grid"), d)?
        }
        _ => return Err(DynamicsError::System("drift of the memory system needs a history".into())),
    };
    let phi = d.apply_potential(&state.u, &spec.potential)?;
    let out = (0..spec.n_modes())
        .map(|k| -spec.kappa * d.alpha(k) * state.u.coeffs()[k] - (1.0 - spec.kappa) * g.coeffs()[k] + phi.coeffs()[k])
        .collect();
    Ok(SpectralField::new(out)?)
}

/// One step of the memory system.
pub fn step_memory(state: &ExtendedState, spec: &SystemSpec, config: &SolverConfig, rng: &mut NoiseStream) -> Result<ExtendedState, DynamicsError> {
    state.check(spec)?;
    let mut s = Stepper::new(spec, SystemKind::Memory, config.dt)?;
    let mut next = state.clone();
    s.step(&mut next, rng)?;
    Ok(next)
}

/// One step of the memoryless system; a history in `state` is advanced as the ersatz one.
pub fn step_memoryless(state: &ExtendedState, spec: &SystemSpec, config: &SolverConfig, rng: &mut NoiseStream) -> Result<ExtendedState, DynamicsError> {
    state.check(spec)?;
    let mut s = Stepper::new(spec, SystemKind::Memoryless, config.dt)?;
    let mut next = state.clone();
    s.step(&mut next, rng)?;
    Ok(next)
}

/// One step of the nudged pair on a shared draw.
pub fn step_nudged_pair(pair: &CoupledPair, spec: &SystemSpec, config: &SolverConfig, rng: &mut NoiseStream) -> Result<CoupledPair, DynamicsError> {
    pair.a.check(spec)?;
    pair.b.check(spec)?;
    let mut s = PairStepper::new(spec, Coupling::Nudged, config.dt)?;
    let mut next = pair.clone();
    s.step(&mut next, rng)?;
    Ok(next)
}

/// `beta_k = kappa alpha_nbar (u_k - v_k) / q_k` for `k <= n_bar`, zero above.
pub fn girsanov_shift(u: &SpectralField, v: &SpectralField, noise: &NoiseSpec, kappa: f64, domain: &DomainSpec) -> Result<SpectralField, DynamicsError> {
    let nb = noise.n_bar();
    let strength = kappa * domain.alpha(nb - 1);
    let mut out = vec![0.0; u.len()];
    for (k, o) in out.iter_mut().enumerate().take(nb) {
        let q = noise.q()[k];
        if q <= 0.0 {
            return Err(DynamicsError::ZeroForcing { k: k + 1 });
        }
        *o = strength * (u.coeffs()[k] - v.coeffs()[k]) / q;
    }
    Ok(SpectralField::new(out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PotentialSpec;

    fn linear_spec() -> SystemSpec {
        let s = SystemSpec::reference(1.0, MemoryBackend::ExpReduction).unwrap();
        let silent = NoiseSpec::silent(s.n_modes(), 2).unwrap();
        s.with_potential(PotentialSpec::zero()).with_noise(silent).unwrap()
    }

    #[test]
    fn zero_state_is_an_equilibrium() {
        let spec = linear_spec();
        let mut st = ExtendedState::zero(&spec);
        let mut s = Stepper::new(&spec, SystemKind::Memory, 2e-3).unwrap();
        let mut noise = NoiseStream::new(1, 0);
        for _ in 0..10 {
            s.step(&mut st, &mut noise).unwrap();
        }
        assert_eq!(st, ExtendedState::zero(&spec));
    }

    #[test]
    fn drift_examples() {
        let spec = SystemSpec::reference(1.0, MemoryBackend::ExpReduction).unwrap();
        let st = ExtendedState::zero(&spec);
        assert!(drift_memory(&st, &spec).unwrap().coeffs().iter().all(|&c| c == 0.0));
        let lin = spec.with_potential(PotentialSpec::linear(1.0).unwrap());
        let st = ExtendedState::new(SpectralField::mode(64, 1, 1.0), lin.zero_history());
        let d = drift_memory(&st, &lin).unwrap();
        assert!((d.coeffs()[0] - 0.5).abs() < 1e-14);
        let none = spec.with_backend(MemoryBackend::Memoryless).unwrap();
        assert!(drift_memory(&ExtendedState::zero(&none), &none).is_err());
    }

    #[test]
    fn heat_decay_without_memory() {
        let spec = linear_spec().with_backend(MemoryBackend::Memoryless).unwrap();
        let mut st = ExtendedState::new(SpectralField::mode(64, 1, 1.0), MemoryState::None);
        let dt = 1e-3;
        let mut s = Stepper::new(&spec, SystemKind::Memoryless, dt).unwrap();
        let mut noise = NoiseStream::new(0, 0);
        for _ in 0..1000 {
            s.step(&mut st, &mut noise).unwrap();
        }
        assert!((st.u.coeffs()[0] - (-1.0f64).exp()).abs() < dt);
    }

    #[test]
    fn girsanov_example() {
        let spec = SystemSpec::reference(1.0, MemoryBackend::ExpReduction).unwrap();
        let b = girsanov_shift(&SpectralField::mode(64, 1, 1.0), &SpectralField::zeros(64), &spec.noise, 0.5, &spec.domain).unwrap();
        assert!((b.coeffs()[0] - 8.0).abs() < 1e-12);
        assert!(b.coeffs()[2..].iter().all(|&c| c == 0.0));
        let same = girsanov_shift(&SpectralField::mode(64, 1, 1.0), &SpectralField::mode(64, 1, 1.0), &spec.noise, 0.5, &spec.domain).unwrap();
        assert_eq!(same.norm_sq(), 0.0);
    }

    #[test]
    fn equal_pair_stays_equal() {
        let spec = SystemSpec::reference(0.25, MemoryBackend::ExpReduction).unwrap();
        let u0 = SpectralField::mode(64, 1, 0.3);
        let mut pair = CoupledPair::constant_pasts(&spec, u0.clone(), u0).unwrap();
        let mut ps = PairStepper::new(&spec, Coupling::Nudged, 2e-3).unwrap();
        let mut noise = NoiseStream::new(3, 1);
        for _ in 0..200 {
            ps.step(&mut pair, &mut noise).unwrap();
        }
        assert_eq!(pair.a, pair.b);
        assert_eq!(pair.difference_psi0(&spec), Some(0.0));
    }

    #[test]
    fn gap_tracker_matches_state_difference() {
        let spec = SystemSpec::reference(0.5, MemoryBackend::ExpReduction).unwrap();
        let mut pair =
            CoupledPair::constant_pasts(&spec, SpectralField::mode(64, 1, 1.0), SpectralField::mode(64, 2, -0.5)).unwrap();
        let mut ps = PairStepper::new(&spec, Coupling::Nudged, 2e-3).unwrap();
        let mut noise = NoiseStream::new(9, 0);
        for _ in 0..500 {
            ps.step(&mut pair, &mut noise).unwrap();
        }
        let (MemoryState::Exp(x), MemoryState::Exp(y)) = (&pair.a.memory, &pair.b.memory) else { panic!() };
        for k in 0..64 {
            assert!((pair.gap().unwrap().m()[k] - (x.m()[k] - y.m()[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_backend_reports_cfl() {
        let spec = SystemSpec::reference(0.0125, MemoryBackend::Grid).unwrap();
        assert!(matches!(Stepper::new(&spec, SystemKind::Memory, 2e-3), Err(DynamicsError::Memory(MemoryError::Cfl { .. }))));
    }
}
