//! Mixing from far-apart initial conditions under synchronous coupling.

use super::fit::RateFit;
use super::output::Outcome;
use super::{column_stats, par_map, ExperimentConfig};
use crate::coupling::{dist_dnbeta, pair_dnbeta, DistanceSpec, Level, MeanEstimate};
use crate::dynamics::{Coupling, CoupledPair, ExtendedState, NoiseStream, PairStepper, SystemSpec};
use crate::error::{CouplingError, ExperimentError};
use crate::spectral::SpectralField;

/// Joint standard errors allowed between the two ensembles' observable means.
pub const MEAN_TOLERANCE: f64 = 3.0;
/// Ceiling on the upper confidence limit of the final coupling distance.
pub const DISTANCE_CEILING: f64 = 0.05;
/// Allowed relative spread of fitted rates around their mean.
pub const RATE_SPREAD: f64 = 0.5;

/// Results at one memory scale.
#[derive(Debug, Clone)]
pub struct ErgodicityScale {
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// Ensemble mean of `d_{N,beta}` over synchronous pairs; each is a Wasserstein upper bound.
    pub distance: Vec<MeanEstimate>,
    pub fit: Option<RateFit>,
    /// Largest `|mean_a - mean_b| / joint SE` over the observables at the horizon.
    pub max_z: f64,
    /// Marginal `d_{N,beta}` at the horizon for synchronous and for independent pairings.
    pub synchronous_marginal: MeanEstimate,
    pub independent_marginal: MeanEstimate,
}

#[derive(Debug, Clone)]
pub struct ErgodicityReport {
    pub outcome: Outcome,
    pub scales: Vec<ErgodicityScale>,
}

/// `V_0` with `||U_0 - V_0|| = separation` in the extended space when `U_0 = 0`,
/// along the configured initial profile.
fn far_field(spec: &SystemSpec, cfg: &ExperimentConfig, separation: f64) -> Result<SpectralField, ExperimentError> {
    let dir = cfg.initial_field();
    let zero = SpectralField::zeros(spec.n_modes());
    let probe = CoupledPair::constant_pasts(spec, dir.clone(), zero)?;
    let norm = probe.difference_h0_sq(spec).ok_or(CouplingError::DifferenceUnavailable)?.sqrt();
    if !(norm > 0.0) {
        return Err(ExperimentError::Config("the initial profile must be nonzero".into()));
    }
    Ok(dir.scale(separation / norm))
}

/// Runs `M` synchronous pairs from `U_0 = 0` and a far constant past, per memory scale.
pub fn run_ergodicity(cfg: &ExperimentConfig) -> Result<ErgodicityReport, ExperimentError> {
    cfg.validate()?;
    let p = &cfg.params;
    let seed = cfg.solver.seed;
    let dt = cfg.solver.dt;
    let stride = cfg.solver.record_every;
    let n_steps = (cfg.horizon / dt).round() as usize;
    let dist = DistanceSpec::new(p.cap_n, p.beta, Level::Extended)?;
    let mut outcome = Outcome::new(cfg.kind.id(), seed);
    let mut scales = Vec::new();
    for &eps in &cfg.sorted_epsilons() {
        let spec = cfg.system.at_epsilon(eps)?;
        let far = far_field(&spec, cfg, p.ergodic_separation)?;
        let stepper = PairStepper::new(&spec, Coupling::Synchronous, dt)?;
        let runs = par_map(cfg.ensemble, cfg.workers, |i| {
            let mut pair = CoupledPair::constant_pasts(&spec, SpectralField::zeros(spec.n_modes()), far.clone())?;
            let mut ps = stepper.clone();
            let mut noise = NoiseStream::new(seed, i as u64);
            let mut series = Vec::with_capacity(n_steps / stride + 1);
            series.push(pair_dnbeta(&pair, &spec, &dist)?);
            for k in 1..=n_steps {
                ps.step(&mut pair, &mut noise)?;
                if k % stride == 0 {
                    series.push(pair_dnbeta(&pair, &spec, &dist)?);
                }
            }
            Ok((series, pair.a, pair.b))
        })?;
        let series: Vec<Vec<f64>> = runs.iter().map(|r| r.0.clone()).collect();
        let distance = column_stats(&series)?;
        let times: Vec<f64> = (0..distance.len()).map(|j| (j * stride) as f64 * dt).collect();
        for (t, d) in times.iter().zip(&distance) {
            outcome.row(eps, *t, "d_nbeta", d.mean, d.half_width, cfg.ensemble);
        }
        let (ts, ys): (Vec<f64>, Vec<f64>) =
            times.iter().zip(&distance).filter(|(t, d)| **t >= p.fit_start && d.mean > 0.0).map(|(t, d)| (*t, d.mean)).unzip();
        let fit = if ts.len() >= 3 { Some(RateFit::semi_log(&ts, &ys, vec![0.0; ts.len()])?) } else { None };
        if let Some(f) = &fit {
            outcome.summary.fits.insert(format!("d_nbeta_eps{eps}"), f.clone());
        }

        let finals_a: Vec<&ExtendedState> = runs.iter().map(|r| &r.1).collect();
        let finals_b: Vec<&ExtendedState> = runs.iter().map(|r| &r.2).collect();
        let mut max_z = 0.0f64;
        for &o in &cfg.observables {
            let va: Vec<f64> = finals_a.iter().map(|s| o.evaluate(s, &spec)).collect();
            let vb: Vec<f64> = finals_b.iter().map(|s| o.evaluate(s, &spec)).collect();
            let (ma, mb) = (MeanEstimate::from_samples(&va)?, MeanEstimate::from_samples(&vb)?);
            let se = ma.std_error().hypot(mb.std_error());
            let z = if se > 0.0 { (ma.mean - mb.mean).abs() / se } else if ma.mean == mb.mean { 0.0 } else { f64::INFINITY };
            max_z = max_z.max(z);
            outcome.row(eps, cfg.horizon, &format!("{}_a", o.name()), ma.mean, ma.half_width, cfg.ensemble);
            outcome.row(eps, cfg.horizon, &format!("{}_b", o.name()), mb.mean, mb.half_width, cfg.ensemble);
        }
        if !cfg.observables.is_empty() {
            outcome.audit(
                format!("observable means agree at eps={eps}"),
                max_z <= MEAN_TOLERANCE,
                format!("largest standardized gap {max_z:.3} vs {MEAN_TOLERANCE}"),
            );
        }
        let last = distance[distance.len() - 1];
        outcome.audit(
            format!("coupling distance small at eps={eps}"),
            last.upper() < DISTANCE_CEILING,
            format!("upper limit {:.4e} vs {DISTANCE_CEILING}", last.upper()),
        );

        let marginal = dist.marginal();
        let m = finals_a.len();
        let sync: Vec<f64> = (0..m).map(|i| dist_dnbeta(finals_a[i], finals_b[i], &spec, &marginal)).collect::<Result<_, _>>()?;
        let indep: Vec<f64> =
            (0..m).map(|i| dist_dnbeta(finals_a[i], finals_b[(i + 1) % m], &spec, &marginal)).collect::<Result<_, _>>()?;
        let (synchronous_marginal, independent_marginal) = (MeanEstimate::from_samples(&sync)?, MeanEstimate::from_samples(&indep)?);
        outcome.row(eps, cfg.horizon, "d_nbeta_marginal_sync", synchronous_marginal.mean, synchronous_marginal.half_width, m);
        outcome.row(eps, cfg.horizon, "d_nbeta_marginal_indep", independent_marginal.mean, independent_marginal.half_width, m);
        outcome.audit(
            format!("synchronous pairing beats independent pairing at eps={eps}"),
            synchronous_marginal.mean <= independent_marginal.mean,
            format!("{:.4e} vs {:.4e}", synchronous_marginal.mean, independent_marginal.mean),
        );
        scales.push(ErgodicityScale { epsilon: eps, times, distance, fit, max_z, synchronous_marginal, independent_marginal });
    }
    let rates: Vec<f64> = scales.iter().filter_map(|s| s.fit.as_ref().map(RateFit::decay_rate)).collect();
    if rates.len() >= 2 {
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let ok = mean > 0.0 && rates.iter().all(|r| *r > 0.0 && (r - mean).abs() <= RATE_SPREAD * mean);
        outcome.audit("fitted mixing rates uniform in eps", ok, format!("rates {rates:.4?} around {mean:.4}"));
    }
    Ok(ErgodicityReport { outcome, scales })
}
