//! Decay of the nudged coupling and the Girsanov budget that pays for it.

use super::fit::RateFit;
use super::output::Outcome;
use super::{par_map, ExperimentConfig, INIT_STREAM_BASE};
use crate::coupling::{MeanEstimate, TvBound};
use crate::dynamics::{girsanov_shift, Coupling, CoupledPair, NoiseStream, PairStepper, SystemSpec};
use crate::error::{DynamicsError, ExperimentError};
use crate::spectral::SpectralField;

/// Fraction of the analytic rate the fitted rates must reach.
pub const RATE_FRACTION: f64 = 0.9;
/// Largest allowed spread of normalized Girsanov budgets across separations.
pub const BUDGET_SPREAD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRate {
    pub epsilon: f64,
    pub index: usize,
    /// True when the initial separation lives above the nudged modes.
    pub high_mode: bool,
    pub rate: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GirsanovPoint {
    pub epsilon: f64,
    pub separation: f64,
    /// `E int_0^T ||beta||^2 dt`.
    pub budget: MeanEstimate,
    /// `budget / separation^2`.
    pub normalized: f64,
    pub tv: TvBound,
}

#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub outcome: Outcome,
    /// `min{2 (kappa alpha_nbar - a_phi), delta}`.
    pub lambda: f64,
    pub rates: Vec<PairRate>,
    pub girsanov: Vec<GirsanovPoint>,
}

fn uniform(noise: &mut NoiseStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * noise.uniform()
}

/// Initial pair `i`: a random base state and a separation on the nudged modes (even `i`)
/// or on the first unnudged mode (odd `i`).
fn random_pair(spec: &SystemSpec, seed: u64, i: usize) -> Result<(CoupledPair, bool), DynamicsError> {
    let n = spec.n_modes();
    let nb = spec.noise.n_bar();
    let mut rng = NoiseStream::new(seed, INIT_STREAM_BASE + i as u64);
    let mut base = vec![0.0; n];
    for c in base.iter_mut().take(3) {
        *c = uniform(&mut rng, -1.0, 1.0);
    }
    let mut other = base.clone();
    let high = i % 2 == 1;
    if high && nb < n {
        let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        other[nb] += sign * uniform(&mut rng, 0.5, 1.0);
    } else {
        for c in other.iter_mut().take(nb) {
            *c += uniform(&mut rng, -1.0, 1.0);
        }
    }
    let pair = CoupledPair::constant_pasts(spec, SpectralField::new(base)?, SpectralField::new(other)?)?;
    Ok((pair, high))
}

/// Runs the nudged pair, fits the decay of `Psi_0(U - V)` over the fit window
/// and compares with `min{2 (kappa alpha_nbar - a_phi), delta}`; then measures the
/// Girsanov budget across initial separations.
pub fn run_contraction(cfg: &ExperimentConfig) -> Result<ContractionReport, ExperimentError> {
    cfg.validate()?;
    let p = &cfg.params;
    let seed = cfg.solver.seed;
    let dt = cfg.solver.dt;
    let stride = cfg.solver.record_every;
    let mut outcome = Outcome::new(cfg.kind.id(), seed);
    let mut rates = Vec::new();
    let mut girsanov = Vec::new();
    let mut lambda = f64::NAN;
    let end_step = (p.fit_end / dt).round() as usize;
    let start_step = (p.fit_start / dt).round() as usize;
    for &eps in &cfg.sorted_epsilons() {
        let spec = cfg.system.at_epsilon(eps)?;
        spec.check_nudging()?;
        lambda = spec.contraction_rate();
        let stepper = PairStepper::new(&spec, Coupling::Nudged, dt)?;
        let fits = par_map(p.n_pairs, cfg.workers, |i| {
            let (mut pair, high) = random_pair(&spec, seed, i)?;
            let mut ps = stepper.clone();
            let mut noise = NoiseStream::new(seed, i as u64);
            let (mut ts, mut ys) = (Vec::new(), Vec::new());
            for k in 1..=end_step {
                ps.step(&mut pair, &mut noise)?;
                if k >= start_step && k % stride == 0 {
                    let e = pair.difference_psi0(&spec).ok_or(crate::error::CouplingError::DifferenceUnavailable)?;
                    ts.push(k as f64 * dt);
                    ys.push(e);
                }
            }
            Ok((RateFit::semi_log(&ts, &ys, vec![0.0; ts.len()])?, high, ts, ys))
        })?;
        for (i, (f, high, ts, ys)) in fits.into_iter().enumerate() {
            for (t, y) in ts.iter().zip(&ys) {
                outcome.row(eps, *t, &format!("psi0_gap_pair{i}"), *y, 0.0, 1);
            }
            rates.push(PairRate { epsilon: eps, index: i, high_mode: high, rate: f.decay_rate(), r2: f.r2 });
            outcome.summary.fits.insert(format!("psi0_gap_eps{eps}_pair{i}"), f);
        }
        let here: Vec<&PairRate> = rates.iter().filter(|r| r.epsilon == eps).collect();
        let worst = here.iter().map(|r| r.rate).fold(f64::INFINITY, f64::min);
        outcome.summary.scalars.insert(format!("min_rate_eps{eps}"), worst);
        outcome.audit(
            format!("contraction rate at eps={eps}"),
            worst >= RATE_FRACTION * lambda,
            format!("slowest fitted rate {worst:.4} vs {RATE_FRACTION} * lambda = {:.4}", RATE_FRACTION * lambda),
        );
        girsanov.extend(girsanov_budget(cfg, &spec, &mut outcome)?);
    }
    outcome.summary.scalars.insert("lambda".into(), lambda);
    Ok(ContractionReport { outcome, lambda, rates, girsanov })
}

/// Unit separation direction `e_1 + e_2 + e_3` scaled to unit extended norm.
fn unit_direction(spec: &SystemSpec) -> Result<SpectralField, ExperimentError> {
    let n = spec.n_modes();
    let mut d = vec![0.0; n];
    for c in d.iter_mut().take(3) {
        *c = 1.0;
    }
    let d = SpectralField::new(d)?;
    let probe = CoupledPair::constant_pasts(spec, d.clone(), SpectralField::zeros(n))?;
    let norm = probe.difference_h0_sq(spec).ok_or(crate::error::CouplingError::DifferenceUnavailable)?.sqrt();
    Ok(d.scale(1.0 / norm))
}

fn girsanov_budget(cfg: &ExperimentConfig, spec: &SystemSpec, outcome: &mut Outcome) -> Result<Vec<GirsanovPoint>, ExperimentError> {
    let p = &cfg.params;
    if p.separations.is_empty() {
        return Ok(Vec::new());
    }
    let dt = cfg.solver.dt;
    let seed = cfg.solver.seed;
    let eps = spec.epsilon();
    let n_steps = (p.shift_horizon / dt).round() as usize;
    let dir = unit_direction(spec)?;
    let u0 = cfg.initial_field();
    let stepper = PairStepper::new(spec, Coupling::Nudged, dt)?;
    let mut points = Vec::new();
    for &sep in &p.separations {
        let budgets = par_map(p.shift_ensemble, cfg.workers, |i| {
            let mut pair = CoupledPair::constant_pasts(spec, u0.clone(), u0.add(&dir.scale(sep)))?;
            let mut ps = stepper.clone();
            let mut noise = NoiseStream::new(seed, i as u64);
            let mut budget = 0.0;
            for _ in 0..n_steps {
                let b = girsanov_shift(&pair.a.u, &pair.b.u, &spec.noise, spec.kappa, &spec.domain)?;
                budget += dt * b.norm_sq();
                ps.step(&mut pair, &mut noise)?;
            }
            Ok(budget)
        })?;
        let budget = MeanEstimate::from_samples(&budgets)?;
        let tv = TvBound::from_budget(budget.mean);
        outcome.row(eps, p.shift_horizon, &format!("girsanov_budget_sep{sep}"), budget.mean, budget.half_width, budgets.len());
        outcome.row(eps, p.shift_horizon, &format!("tv_bound_sep{sep}"), tv.pinsker, 0.0, budgets.len());
        points.push(GirsanovPoint { epsilon: eps, separation: sep, budget, normalized: budget.mean / (sep * sep), tv });
    }
    let norm: Vec<f64> = points.iter().map(|g| g.normalized).collect();
    let (lo, hi) = norm.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    outcome.audit(
        format!("girsanov budget proportional to separation^2 at eps={eps}"),
        hi < BUDGET_SPREAD * lo,
        format!("normalized budgets between {lo:.4e} and {hi:.4e}"),
    );
    let small: Vec<&GirsanovPoint> = points.iter().filter(|g| g.separation <= 0.1).collect();
    if !small.is_empty() {
        let worst = small.iter().map(|g| g.tv.pinsker).fold(0.0f64, f64::max);
        outcome.audit(
            format!("total-variation bound below one for small separations at eps={eps}"),
            worst < 1.0,
            format!("largest bound {worst:.4}"),
        );
    }
    Ok(points)
}
