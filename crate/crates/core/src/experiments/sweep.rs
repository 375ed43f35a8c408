//! Finite-time distance between the memory system and its memoryless limit.

use super::fit::RateFit;
use super::output::Outcome;
use super::{column_stats, par_map, ExperimentConfig};
use crate::coupling::MeanEstimate;
use crate::dynamics::{Coupling, CoupledPair, ExtendedState, NoiseStream, PairStepper};
use crate::error::ExperimentError;

/// Lower bound on the fitted log-log slope audited by the sweep.
pub const SLOPE_FLOOR: f64 = 1.0 / 3.0 - 0.05;

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub outcome: Outcome,
    /// Memory scales, largest first.
    pub epsilons: Vec<f64>,
    /// `sup_t E ||U^eps(t) - U^{0,eps}(t)||^2` over the recorded times.
    pub sup_errors: Vec<MeanEstimate>,
    pub sup_times: Vec<f64>,
    pub fit: Option<RateFit>,
    /// Both systems consumed identical draws on every trajectory.
    pub checksums_match: bool,
    pub strictly_decreasing: bool,
}

/// For each memory scale, couples `(u^eps, eta^eps)` and `(u^0, eta^{0,eps})` on one
/// Brownian path from the same deterministic state and records
/// `E ||U^eps - U^{0,eps}||^2` in the extended space.
pub fn run_short_memory_sweep(cfg: &ExperimentConfig) -> Result<SweepReport, ExperimentError> {
    cfg.validate()?;
    let seed = cfg.solver.seed;
    let dt = cfg.solver.dt;
    let stride = cfg.solver.record_every;
    let n_steps = (cfg.horizon / dt).round() as usize;
    let u0 = cfg.initial_field();
    let epsilons = cfg.sorted_epsilons();
    let mut outcome = Outcome::new(cfg.kind.id(), seed);
    let (mut sup_errors, mut sup_times) = (Vec::new(), Vec::new());
    let mut checksums_match = true;
    for &eps in &epsilons {
        let spec = cfg.system.at_epsilon(eps)?;
        let stepper = PairStepper::new(&spec, Coupling::Sweep, dt)?;
        let runs = par_map(cfg.ensemble, cfg.workers, |i| {
            let mut ps = stepper.clone();
            let start = ExtendedState::constant_past(&spec, u0.clone())?;
            let mut pair = CoupledPair::shared_history(start.clone(), start, &spec);
            let mut na = NoiseStream::new(seed, i as u64);
            let mut nb = NoiseStream::new(seed, i as u64);
            let mut series = Vec::with_capacity(n_steps / stride + 1);
            let gap = |p: &CoupledPair| p.difference_h0_sq(&spec).ok_or(crate::error::CouplingError::DifferenceUnavailable);
            series.push(gap(&pair)?);
            for k in 1..=n_steps {
                ps.step_separate(&mut pair, &mut na, &mut nb)?;
                if k % stride == 0 {
                    series.push(gap(&pair)?);
                }
            }
            Ok((series, na.checksum() == nb.checksum() && na.draws() == nb.draws()))
        })?;
        checksums_match &= runs.iter().all(|r| r.1);
        let series: Vec<Vec<f64>> = runs.into_iter().map(|r| r.0).collect();
        let stats = column_stats(&series)?;
        let mut best = 0;
        for (j, s) in stats.iter().enumerate() {
            outcome.row(eps, (j * stride) as f64 * dt, "h0_gap_sq", s.mean, s.half_width, cfg.ensemble);
            if s.mean > stats[best].mean {
                best = j;
            }
        }
        sup_errors.push(stats[best]);
        sup_times.push((best * stride) as f64 * dt);
        outcome.row(eps, sup_times[sup_times.len() - 1], "sup_h0_gap_sq", stats[best].mean, stats[best].half_width, cfg.ensemble);
    }
    outcome.audit(
        "synchronous noise",
        checksums_match,
        "memory and memoryless systems consumed identical draw sequences on every trajectory",
    );
    let strictly_decreasing = sup_errors.windows(2).all(|w| w[0].mean - w[0].half_width > w[1].mean + w[1].half_width);
    if epsilons.len() >= 2 {
        let detail: Vec<String> = epsilons.iter().zip(&sup_errors).map(|(e, s)| format!("eps={e}: {:.4e}+-{:.1e}", s.mean, s.half_width)).collect();
        outcome.audit("errors strictly decreasing in eps beyond MC error", strictly_decreasing, detail.join("; "));
    }
    let fit = if epsilons.len() >= 3 && sup_errors.iter().all(|s| s.mean > 0.0) {
        let ys: Vec<f64> = sup_errors.iter().map(|s| s.mean).collect();
        let f = RateFit::log_log(&epsilons, &ys, sup_errors.iter().map(|s| s.half_width).collect())?;
        outcome.audit(
            "log-log slope",
            f.slope >= SLOPE_FLOOR,
            format!("slope {:.4} vs floor {SLOPE_FLOOR:.4} (R^2 {:.4})", f.slope, f.r2),
        );
        outcome.summary.fits.insert("sup_h0_gap_sq_vs_eps".into(), f.clone());
        outcome.summary.scalars.insert("slope".into(), f.slope);
        Some(f)
    } else {
        None
    };
    Ok(SweepReport { outcome, epsilons, sup_errors, sup_times, fit, checksums_match, strictly_decreasing })
}
