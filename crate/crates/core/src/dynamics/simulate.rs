//! Single-trajectory simulation with observable recording.

use super::observables::Observable;
use super::rng::NoiseStream;
use super::stepper::{Stepper, SystemKind};
use super::{ExtendedState, MemoryBackend, SolverConfig, SystemSpec};
use crate::error::DynamicsError;

const MAX_STEPS: f64 = 1e8;

/// Recorded time series and the final state of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub observables: Vec<Observable>,
    pub times: Vec<f64>,
    /// `values[i][j]` is observable `i` at `times[j]`.
    pub values: Vec<Vec<f64>>,
    pub final_state: ExtendedState,
    /// Checksum of every normal consumed.
    pub checksum: u64,
}

impl Trajectory {
    pub fn series(&self, o: Observable) -> Option<&[f64]> {
        self.observables.iter().position(|&x| x == o).map(|i| self.values[i].as_slice())
    }
}

/// Number of steps covering `horizon`, rejecting runs above `1e8` steps.
pub(crate) fn step_count(horizon: f64, dt: f64) -> Result<usize, DynamicsError> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(DynamicsError::Solver(format!("horizon must be finite and nonnegative, got {horizon}")));
    }
    let n = (horizon / dt).round();
    if n > MAX_STEPS {
        return Err(DynamicsError::Solver(format!("{n} steps exceed the limit of {MAX_STEPS}")));
    }
    Ok(n as usize)
}

/// Runs the system selected by the backend (memoryless when there is no history)
/// from `u0` over `[0, horizon]`, drawing from stream `(config.seed, 0)`.
pub fn simulate(
    spec: &SystemSpec,
    u0: ExtendedState,
    horizon: f64,
    config: &SolverConfig,
    observables: &[Observable],
) -> Result<Trajectory, DynamicsError> {
    config.validate()?;
    u0.check(spec)?;
    let kind = if spec.backend == MemoryBackend::Memoryless { SystemKind::Memoryless } else { SystemKind::Memory };
    let mut stepper = Stepper::new(spec, kind, config.dt)?;
    let mut noise = NoiseStream::new(config.seed, 0);
    let n = step_count(horizon, config.dt)?;
    let mut state = u0;
    let mut times = Vec::with_capacity(n / config.record_every + 1);
    let mut values = vec![Vec::with_capacity(times.capacity()); observables.len()];
    let mut record = |t: f64, s: &ExtendedState, times: &mut Vec<f64>| {
        times.push(t);
        for (v, o) in values.iter_mut().zip(observables) {
            v.push(o.evaluate(s, spec));
        }
    };
    record(0.0, &state, &mut times);
    for i in 1..=n {
        stepper.step(&mut state, &mut noise)?;
        if i % config.record_every == 0 {
            record(i as f64 * config.dt, &state, &mut times);
        }
    }
    Ok(Trajectory { observables: observables.to_vec(), times, values, final_state: state, checksum: noise.checksum() })
}
