use thiserror::Error;

/// Errors raised by the spectral layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("mode index {k} outside 1..={n_modes}")]
    ModeIndex { k: usize, n_modes: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("invalid potential: {0}")]
    Potential(String),
    #[error("invalid noise: {0}")]
    Noise(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

/// Errors raised by kernels, history grids and the memory reduction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoryError {
    #[error("epsilon must lie in (0, 1], got {0}")]
    Epsilon(f64),
    #[error("kernel is already rescaled (epsilon = {0})")]
    AlreadyRescaled(f64),
    #[error("kernel violates the decay condition at s = {s}: mu' + delta*mu = {excess:e} > 0")]
    Decay { s: f64, excess: f64 },
    #[error("kernel is not positive at s = {s}")]
    Positivity { s: f64 },
    #[error("kernel first moment is {moment}, expected 1")]
    FirstMoment { moment: f64 },
    #[error("invalid kernel table: {0}")]
    Table(String),
    #[error("invalid history grid: {0}")]
    Grid(String),
    #[error("time step {dt} exceeds the transport CFL limit {max_dt}")]
    Cfl { dt: f64, max_dt: f64 },
    #[error("operation requires an exponential kernel")]
    NotExponential,
    #[error("path too short: covers {covered}, need {needed}")]
    PathTooShort { covered: f64, needed: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("tail radius must be at least 1, got {0}")]
    TailRadius(f64),
    #[error("weighted norm order must be 0 or 1, got {0}")]
    NormOrder(u8),
}

/// Errors raised by the time integrators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("invalid system: {0}")]
    System(String),
    #[error("invalid solver configuration: {0}")]
    Solver(String),
    #[error("state does not match the system: {0}")]
    State(String),
    #[error("nudging requires kappa * alpha_nbar = {lhs} > a_phi = {a_phi}")]
    NudgeCondition { lhs: f64, a_phi: f64 },
    #[error("forced mode {k} has zero noise intensity")]
    ZeroForcing { k: usize },
    #[error("trajectory diverged at t = {0}")]
    Diverged(f64),
}

/// Errors raised by distance evaluations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("invalid distance parameters: {0}")]
    Params(String),
    #[error("Lyapunov weight exponent {0} exceeds the overflow guard")]
    Overflow(f64),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("history difference unavailable for this state representation")]
    DifferenceUnavailable,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Errors raised by experiment campaigns.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("fit needs at least {need} points, got {got}")]
    Fit { need: usize, got: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
