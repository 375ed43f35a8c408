//! Energy inequalities along Monte-Carlo ensembles and exponential-moment stability.

use super::fit::{fit_exponential_tail, ExpTailFit};
use super::output::Outcome;
use super::{column_stats, par_map, ExperimentConfig};
use crate::coupling::MeanEstimate;
use crate::dynamics::{energy_psi0, energy_psi1, history_norm_sq, ExtendedState, NoiseStream, Stepper, SystemKind, SystemSpec};
use crate::error::ExperimentError;

/// Multiple of the standard error allowed on top of the deterministic bound.
pub const MC_SLACK: f64 = 3.0;
/// Relative time-discretization slack, in units of `dt`.
pub const DT_SLACK: f64 = 5.0;
/// Allowed overshoot of the exponential moment over its fitted asymptote.
pub const ASYMPTOTE_FACTOR: f64 = 1.2;

/// One side-by-side comparison of an energy inequality at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentAudit {
    pub epsilon: f64,
    pub t: f64,
    /// `0` for the `Psi_0` inequality, `1` for the `Psi_1` one.
    pub order: u8,
    pub lhs: MeanEstimate,
    pub rhs: f64,
    pub slack: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct MomentReport {
    pub outcome: Outcome,
    pub audits: Vec<MomentAudit>,
    /// Largest `x phi(x) + a2 |x|^(p0+1) - a3` over visited collocation values.
    pub certificate_excess: f64,
    /// The same with `a3` halved; positive means the mis-specified constant was caught.
    pub control_excess: f64,
}

impl MomentReport {
    pub fn control_flagged(&self) -> bool {
        self.control_excess > 0.0
    }
}

#[derive(Debug, Clone)]
pub struct ExpMomentReport {
    pub outcome: Outcome,
    pub epsilons: Vec<f64>,
    pub fits: Vec<ExpTailFit>,
    /// `max_{t in [start, T]} E exp(beta Psi_0)` per scale.
    pub late_max: Vec<f64>,
}

/// Constants of the `Psi_0` and `Psi_1` bounds: each reads `intercept + slope t`.
struct Bounds {
    psi0: (f64, f64),
    psi1: (f64, f64),
}

fn bounds(spec: &SystemSpec, start: &ExtendedState) -> Bounds {
    let phi = &spec.potential;
    let kappa = spec.kappa;
    let source = phi.a3() * spec.domain.length() + 0.5 * spec.noise.trace_qq();
    let p0 = energy_psi0(start, spec);
    let gain = 2.0 * phi.a_phi().powi(2) / (spec.domain.alpha(0) * kappa * kappa);
    Bounds {
        psi0: (p0, source),
        psi1: (energy_psi1(start, spec) + gain * p0, source * gain + 0.5 * spec.noise.trace_qaq(&spec.domain)),
    }
}

/// Per-trajectory record at the checkpoints: the two left-hand sides and the
/// extreme certificate excesses.
struct Sample {
    lhs0: Vec<f64>,
    lhs1: Vec<f64>,
    excess: f64,
    control: f64,
}

fn moment_trajectory(spec: &SystemSpec, cfg: &ExperimentConfig, stops: &[usize], i: usize) -> Result<Sample, ExperimentError> {
    let dt = cfg.solver.dt;
    let stride = cfg.solver.record_every;
    let d = &spec.domain;
    let kappa = spec.kappa;
    let r = spec.kernel.rate();
    let control = spec.potential.clone().with_a3(0.5 * spec.potential.a3());
    let mut stepper = Stepper::new(spec, SystemKind::Memory, dt)?;
    let mut state = ExtendedState::constant_past(spec, cfg.initial_field())?;
    let mut noise = NoiseStream::new(cfg.solver.seed, i as u64);
    let (mut i0, mut i1) = (0.0, 0.0);
    let mut out = Sample { lhs0: Vec::new(), lhs1: Vec::new(), excess: f64::NEG_INFINITY, control: f64::NEG_INFINITY };
    let probe = |state: &ExtendedState, out: &mut Sample| -> Result<(), ExperimentError> {
        for &x in d.to_physical(&state.u)?.values() {
            out.excess = out.excess.max(spec.potential.certificate_excess(x));
            out.control = out.control.max(control.certificate_excess(x));
        }
        Ok(())
    };
    probe(&state, &mut out)?;
    let last = stops.last().copied().unwrap_or(0);
    let mut next = 0;
    for k in 0..=last {
        while next < stops.len() && stops[next] == k {
            out.lhs0.push(energy_psi0(&state, spec) + i0);
            out.lhs1.push(energy_psi1(&state, spec) + i1);
            next += 1;
        }
        if k == last {
            break;
        }
        // Left-rule dissipation integrals over the coming step.
        let u = state.u.coeffs();
        let (a1, a2) = (d.sobolev_norm_sq(u, 1.0), d.sobolev_norm_sq(u, 2.0));
        let (h0, h1) = (history_norm_sq(&state.memory, 0, spec), history_norm_sq(&state.memory, 1, spec));
        i0 += dt * (kappa * a1 + 0.5 * (1.0 - kappa) * r * h0);
        i1 += dt * (0.5 * kappa * a2 + 0.5 * (1.0 - kappa) * r * h1);
        stepper.step(&mut state, &mut noise)?;
        if (k + 1) % stride == 0 {
            probe(&state, &mut out)?;
        }
    }
    Ok(out)
}

/// Evaluates both sides of the `Psi_0` and `Psi_1` energy inequalities at the checkpoints
/// and runs the halved-`a3` negative control.
pub fn run_moment_audit(cfg: &ExperimentConfig) -> Result<MomentReport, ExperimentError> {
    cfg.validate()?;
    let p = &cfg.params;
    let dt = cfg.solver.dt;
    let mut outcome = Outcome::new(cfg.kind.id(), cfg.solver.seed);
    let mut checkpoints = p.checkpoints.clone();
    checkpoints.sort_by(f64::total_cmp);
    let stops: Vec<usize> = checkpoints.iter().map(|t| (t / dt).round() as usize).collect();
    let mut audits = Vec::new();
    let (mut excess, mut control) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &eps in &cfg.sorted_epsilons() {
        let spec = cfg.system.at_epsilon(eps)?;
        let start = ExtendedState::constant_past(&spec, cfg.initial_field())?;
        let b = bounds(&spec, &start);
        let samples = par_map(cfg.ensemble, cfg.workers, |i| moment_trajectory(&spec, cfg, &stops, i))?;
        excess = samples.iter().fold(excess, |m, s| m.max(s.excess));
        control = samples.iter().fold(control, |m, s| m.max(s.control));
        for (order, (intercept, slope)) in [(0u8, b.psi0), (1, b.psi1)] {
            let rows: Vec<Vec<f64>> = samples.iter().map(|s| if order == 0 { s.lhs0.clone() } else { s.lhs1.clone() }).collect();
            for (j, lhs) in column_stats(&rows)?.into_iter().enumerate() {
                let t = checkpoints[j];
                let rhs = intercept + slope * t;
                let slack = MC_SLACK * lhs.std_error() + DT_SLACK * dt * rhs;
                let passed = lhs.mean <= rhs + slack;
                outcome.row(eps, t, &format!("psi{order}_lhs"), lhs.mean, lhs.half_width, cfg.ensemble);
                outcome.row(eps, t, &format!("psi{order}_rhs"), rhs, 0.0, cfg.ensemble);
                outcome.audit(
                    format!("psi{order} inequality at eps={eps}, t={t}"),
                    passed,
                    format!("lhs {:.4e} vs rhs {rhs:.4e} + slack {slack:.2e}", lhs.mean),
                );
                audits.push(MomentAudit { epsilon: eps, t, order, lhs, rhs, slack, passed });
            }
        }
    }
    outcome.audit(
        "dissipativity certificate holds on visited values",
        excess <= 1e-12,
        format!("largest excess {excess:.3e}"),
    );
    outcome.audit(
        "halved a3 is flagged",
        control > 0.0,
        format!("largest excess with a3/2: {control:.3e}"),
    );
    outcome.summary.scalars.insert("certificate_excess".into(), excess);
    outcome.summary.scalars.insert("control_excess".into(), control);
    Ok(MomentReport { outcome, audits, certificate_excess: excess, control_excess: control })
}

/// Tracks `E exp(beta Psi_0(U(t)))` up to the configured horizon, fits
/// `C_0 + a e^{-c t}`, and audits the late-time maximum against `1.2 C_0`.
pub fn run_exponential_moments(cfg: &ExperimentConfig) -> Result<ExpMomentReport, ExperimentError> {
    cfg.validate()?;
    let p = &cfg.params;
    let dt = cfg.solver.dt;
    let stride = cfg.solver.record_every;
    let n_steps = (cfg.horizon / dt).round() as usize;
    let beta = p.moment_beta;
    let mut outcome = Outcome::new(cfg.kind.id(), cfg.solver.seed);
    let epsilons = cfg.sorted_epsilons();
    let (mut fits, mut late_max) = (Vec::new(), Vec::new());
    for &eps in &epsilons {
        let spec = cfg.system.at_epsilon(eps)?;
        let base = Stepper::new(&spec, SystemKind::Memory, dt)?;
        let series = par_map(cfg.ensemble, cfg.workers, |i| {
            let mut stepper = base.clone();
            let mut state = ExtendedState::constant_past(&spec, cfg.initial_field())?;
            let mut noise = NoiseStream::new(cfg.solver.seed, i as u64);
            let mut out = Vec::with_capacity(n_steps / stride + 1);
            out.push((beta * energy_psi0(&state, &spec)).exp());
            for k in 1..=n_steps {
                stepper.step(&mut state, &mut noise)?;
                if k % stride == 0 {
                    out.push((beta * energy_psi0(&state, &spec)).exp());
                }
            }
            Ok(out)
        })?;
        let stats = column_stats(&series)?;
        let ts: Vec<f64> = (0..stats.len()).map(|j| (j * stride) as f64 * dt).collect();
        let ys: Vec<f64> = stats.iter().map(|s| s.mean).collect();
        for (t, s) in ts.iter().zip(&stats) {
            outcome.row(eps, *t, "exp_beta_psi0", s.mean, s.half_width, cfg.ensemble);
        }
        let fit = fit_exponential_tail(&ts, &ys)?;
        let worst = ts.iter().zip(&ys).filter(|(t, _)| **t >= p.moment_start).map(|(_, y)| *y).fold(f64::NEG_INFINITY, f64::max);
        outcome.audit(
            format!("exponential moment below {ASYMPTOTE_FACTOR} x asymptote at eps={eps}"),
            fit.asymptote > 0.0 && fit.rate > 0.0 && worst <= ASYMPTOTE_FACTOR * fit.asymptote,
            format!("late maximum {worst:.4} vs fitted C0 {:.4} (rate {:.3})", fit.asymptote, fit.rate),
        );
        outcome.summary.scalars.insert(format!("asymptote_eps{eps}"), fit.asymptote);
        outcome.summary.scalars.insert(format!("rate_eps{eps}"), fit.rate);
        fits.push(fit);
        late_max.push(worst);
    }
    Ok(ExpMomentReport { outcome, epsilons, fits, late_max })
}
