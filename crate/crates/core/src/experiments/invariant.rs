//! Stationary statistics of the memory system against its memoryless limit.

use super::fit::RateFit;
use super::output::Outcome;
use super::{par_map, ExperimentConfig};
use crate::coupling::{dist_dnbeta, DistanceSpec, Level, MeanEstimate};
use crate::dynamics::{ExtendedState, MemoryBackend, NoiseStream, Observable, Stepper, SystemKind, SystemSpec};
use crate::error::ExperimentError;
use crate::spectral::PotentialSpec;

/// Standard errors allowed in the Ornstein-Uhlenbeck variance check.
pub const OU_TOLERANCE: f64 = 3.0;

/// `<f>_eps - <f>_0` from paired time averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableGap {
    pub observable: Observable,
    pub epsilon: f64,
    pub gap: MeanEstimate,
    /// `<f>_0` itself.
    pub reference: MeanEstimate,
}

#[derive(Debug, Clone)]
pub struct InvariantReport {
    pub outcome: Outcome,
    /// Memory scales, largest first.
    pub epsilons: Vec<f64>,
    pub gaps: Vec<ObservableGap>,
    /// Marginal `d_{N,beta}` between the paired final states, per scale.
    pub marginal_distance: Vec<MeanEstimate>,
    /// Log-log fits of `|gap|` against `eps`, per observable, where all gaps are nonzero.
    pub fits: Vec<(Observable, RateFit)>,
    /// `|gap|` decreases strictly along the sweep for every observable.
    pub monotone: bool,
    /// Empirical `<||u||^2>_0` of the linear system and its closed form `sum q_k^2 / (2 alpha_k)`.
    pub linear: Option<(MeanEstimate, f64)>,
}

/// Time averages of `observables` over `[burn_in, burn_in + window]` and the final state.
fn time_average(
    spec: &SystemSpec,
    kind: SystemKind,
    cfg: &ExperimentConfig,
    observables: &[Observable],
    i: usize,
) -> Result<(Vec<f64>, ExtendedState), ExperimentError> {
    let dt = cfg.solver.dt;
    let stride = cfg.solver.record_every;
    let burn = (cfg.params.burn_in / dt).round() as usize;
    let avg = (cfg.params.window / dt).round() as usize;
    let mut stepper = Stepper::new(spec, kind, dt)?;
    let mut state = ExtendedState::constant_past(spec, cfg.initial_field())?;
    let mut noise = NoiseStream::new(cfg.solver.seed, i as u64);
    for _ in 0..burn {
        stepper.step(&mut state, &mut noise)?;
    }
    let mut acc = vec![0.0; observables.len()];
    let mut count = 0usize;
    for k in 1..=avg {
        stepper.step(&mut state, &mut noise)?;
        if k % stride == 0 {
            for (a, o) in acc.iter_mut().zip(observables) {
                *a += o.evaluate(&state, spec);
            }
            count += 1;
        }
    }
    for a in &mut acc {
        *a /= count.max(1) as f64;
    }
    Ok((acc, state))
}

/// Compares stationary time averages of the memory system at each scale with the
/// memoryless system on common noise, and checks the linear memoryless variance.
pub fn run_invariant_limit(cfg: &ExperimentConfig) -> Result<InvariantReport, ExperimentError> {
    cfg.validate()?;
    let p = &cfg.params;
    if !(p.window > 0.0 && p.burn_in >= 0.0) {
        return Err(ExperimentError::Config("averaging window must be positive and burn-in nonnegative".into()));
    }
    let obs = &cfg.observables;
    let epsilons = cfg.sorted_epsilons();
    let mut outcome = Outcome::new(cfg.kind.id(), cfg.solver.seed);
    let dist = DistanceSpec::new(p.cap_n, p.beta, Level::Marginal)?;

    let limit = cfg.system.with_backend(MemoryBackend::Memoryless)?;
    let reference = par_map(cfg.ensemble, cfg.workers, |i| time_average(&limit, SystemKind::Memoryless, cfg, obs, i))?;
    let mut gaps = Vec::new();
    let mut marginal_distance = Vec::new();
    for &eps in &epsilons {
        let (spec, kind) = if p.memoryless_both {
            (limit.clone(), SystemKind::Memoryless)
        } else {
            (cfg.system.at_epsilon(eps)?, SystemKind::Memory)
        };
        let runs = par_map(cfg.ensemble, cfg.workers, |i| time_average(&spec, kind, cfg, obs, i))?;
        for (j, &o) in obs.iter().enumerate() {
            let d: Vec<f64> = runs.iter().zip(&reference).map(|(a, b)| a.0[j] - b.0[j]).collect();
            let r: Vec<f64> = reference.iter().map(|b| b.0[j]).collect();
            let gap = MeanEstimate::from_samples(&d)?;
            outcome.row(eps, p.burn_in + p.window, &format!("{}_gap", o.name()), gap.mean, gap.half_width, cfg.ensemble);
            gaps.push(ObservableGap { observable: o, epsilon: eps, gap, reference: MeanEstimate::from_samples(&r)? });
        }
        let d: Vec<f64> =
            runs.iter().zip(&reference).map(|(a, b)| dist_dnbeta(&a.1, &b.1, &limit, &dist)).collect::<Result<_, _>>()?;
        let md = MeanEstimate::from_samples(&d)?;
        outcome.row(eps, p.burn_in + p.window, "d_nbeta_marginal", md.mean, md.half_width, cfg.ensemble);
        marginal_distance.push(md);
    }

    let mut monotone = true;
    let mut fits = Vec::new();
    for &o in obs {
        let g: Vec<&ObservableGap> = gaps.iter().filter(|g| g.observable == o).collect();
        let abs: Vec<f64> = g.iter().map(|g| g.gap.mean.abs()).collect();
        if p.memoryless_both {
            let worst = g.iter().map(|g| g.gap.mean.abs() - g.gap.half_width).fold(f64::NEG_INFINITY, f64::max);
            outcome.audit(format!("{} gap vanishes for identical systems", o.name()), worst <= 0.0, format!("largest excess {worst:.3e}"));
            continue;
        }
        let dec = abs.windows(2).all(|w| w[1] < w[0]);
        monotone &= dec;
        let detail: Vec<String> = g.iter().map(|g| format!("eps={}: {:.3e}+-{:.1e}", g.epsilon, g.gap.mean, g.gap.half_width)).collect();
        outcome.audit(format!("{} gap decreasing in eps", o.name()), dec, detail.join("; "));
        if abs.len() >= 3 && abs.iter().all(|a| *a > 0.0) {
            let f = RateFit::log_log(&epsilons, &abs, g.iter().map(|g| g.gap.half_width).collect())?;
            outcome.summary.fits.insert(format!("{}_gap_vs_eps", o.name()), f.clone());
            fits.push((o, f));
        }
    }

    let linear = if p.linear_check { Some(linear_variance(cfg, &limit, &mut outcome)?) } else { None };
    Ok(InvariantReport { outcome, epsilons, gaps, marginal_distance, fits, monotone, linear })
}

fn linear_variance(cfg: &ExperimentConfig, limit: &SystemSpec, outcome: &mut Outcome) -> Result<(MeanEstimate, f64), ExperimentError> {
    let spec = limit.with_potential(PotentialSpec::zero());
    let d = &spec.domain;
    let exact: f64 = spec.noise.q().iter().enumerate().map(|(k, q)| q * q / (2.0 * d.alpha(k))).sum();
    let runs = par_map(cfg.ensemble, cfg.workers, |i| time_average(&spec, SystemKind::Memoryless, cfg, &[Observable::NormHSq], i))?;
    let v: Vec<f64> = runs.iter().map(|r| r.0[0]).collect();
    let est = MeanEstimate::from_samples(&v)?;
    let z = (est.mean - exact).abs() / est.std_error();
    outcome.row(0.0, cfg.params.burn_in + cfg.params.window, "linear_norm_h_sq", est.mean, est.half_width, cfg.ensemble);
    outcome.summary.scalars.insert("linear_norm_h_sq_exact".into(), exact);
    outcome.audit(
        "linear memoryless variance matches closed form",
        z <= OU_TOLERANCE,
        format!("{:.5e} vs {exact:.5e} ({z:.2} SE)", est.mean),
    );
    Ok((est, exact))
}
