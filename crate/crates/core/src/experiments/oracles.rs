//! Cross-checks of the three history representations, kernel tails and
//! the time-step order of the integrator.

use super::output::Outcome;
use super::{par_map, ExperimentConfig};
use crate::dynamics::{ExtendedState, MemoryBackend, NoiseStream, Stepper, SystemKind, SystemSpec};
use crate::error::ExperimentError;
use crate::memory::{
    history_representation, kernel_average, transport_step_in_place, weighted_norm_sq, DrivePath, ExpMemoryState, ExpStepCoeffs,
    HistoryField, HistoryGrid, KernelSpec,
};
use crate::quadrature::{uniform_edges, CompositeRule};
use crate::spectral::{DomainSpec, NoiseSpec, PotentialSpec, SpectralField};

/// Pairwise relative tolerance between history representations.
pub const TRIANGLE_TOL: f64 = 1e-2;
/// Accepted error ratios under step halving for a first-order method.
pub const ORDER_RANGE: (f64, f64) = (1.8, 2.2);
/// Tail exponents `gamma` in `int_{t eps^gamma}^inf mu_eps`.
pub const TAIL_GAMMAS: [f64; 3] = [1.0 / 3.0, 0.5, 2.0 / 3.0];

const ORACLE_MODES: usize = 8;
const DRIVEN_MODES: usize = 4;

/// Errors of one resolution level, as maxima and means over the drives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleLevel {
    pub dt: f64,
    /// Transport grid against the representation formula, relative weighted norm.
    pub transport_vs_formula: (f64, f64),
    /// Exponential reduction against kernel averages of the formula.
    pub reduction_vs_formula: (f64, f64),
    /// Exponential reduction against kernel averages of the transport grid.
    pub reduction_vs_transport: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCheck {
    pub gamma: f64,
    pub quadrature: f64,
    pub bound: f64,
}

impl TailCheck {
    pub fn holds(&self) -> bool {
        self.quadrature <= self.bound * (1.0 + 1e-9)
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub outcome: Outcome,
    pub levels: Vec<TriangleLevel>,
    pub tails: Vec<TailCheck>,
    /// Successive error ratios of the linear self-convergence study.
    pub order_ratios: Vec<f64>,
}

/// A smooth random drive on the first few modes, with its constant past.
#[derive(Debug, Clone)]
struct Drive {
    past: Vec<f64>,
    amp: Vec<f64>,
    freq: Vec<f64>,
    phase: Vec<f64>,
}

impl Drive {
    fn random(seed: u64, i: usize) -> Self {
        let mut rng = NoiseStream::new(seed, i as u64);
        let mut draw = |lo: f64, hi: f64, n: usize| (0..n).map(|_| lo + (hi - lo) * rng.uniform()).collect::<Vec<_>>();
        Self {
            past: draw(-1.0, 1.0, DRIVEN_MODES),
            amp: draw(-1.0, 1.0, DRIVEN_MODES),
            freq: draw(0.5, 3.0, DRIVEN_MODES),
            phase: draw(0.0, std::f64::consts::TAU, DRIVEN_MODES),
        }
    }

    fn at(&self, t: f64) -> SpectralField {
        let mut c = vec![0.0; ORACLE_MODES];
        for (k, ck) in c.iter_mut().enumerate().take(DRIVEN_MODES) {
            *ck = self.past[k] + self.amp[k] * ((self.freq[k] * t + self.phase[k]).sin() - self.phase[k].sin());
        }
        SpectralField::from_vec(c)
    }

    fn past_field(&self) -> SpectralField {
        let mut c = vec![0.0; ORACLE_MODES];
        c[..DRIVEN_MODES].copy_from_slice(&self.past);
        SpectralField::from_vec(c)
    }
}

fn rel(diff: f64, base: f64) -> f64 {
    if base > 0.0 {
        diff / base
    } else {
        diff
    }
}

fn euclid(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    (d, b.iter().map(|y| y * y).sum::<f64>().sqrt())
}

/// The three representations of one drive at `horizon`, on a uniform grid with `ds = dt`.
fn triangle_errors(
    drive: &Drive,
    kernel: &KernelSpec,
    domain: &DomainSpec,
    dt: f64,
    horizon: f64,
) -> Result<[f64; 3], ExperimentError> {
    let scale = kernel.epsilon() / kernel.delta();
    let grid = HistoryGrid::uniform(kernel, dt, 25.0 * scale)?;
    let n_steps = (horizon / dt).round() as usize;
    let past = drive.past_field();
    let eta0 = HistoryField::from_array(ndarray::Array2::from_shape_fn((ORACLE_MODES, grid.len()), |(k, j)| {
        past.coeffs()[k] * grid.nodes()[j]
    }));
    let mut eta = eta0.clone();
    let mut exp = ExpMemoryState::constant_past(&past, kernel)?;
    let coeffs = ExpStepCoeffs::new(kernel, dt)?;
    for i in 0..n_steps {
        let u = drive.at(i as f64 * dt);
        transport_step_in_place(&mut eta, u.coeffs(), dt, &grid)?;
        exp.step_in_place(u.coeffs(), &coeffs);
    }
    let path = DrivePath::sample(dt, horizon, |t| drive.at(t))?;
    let formula = history_representation(&path, &eta0, horizon, &grid)?;
    let base = weighted_norm_sq(&formula, 0, &grid, domain)?.sqrt();
    let tr = weighted_norm_sq(&eta.sub(&formula), 0, &grid, domain)?.sqrt();
    let (m_formula, m_transport) = (kernel_average(&formula, &grid), kernel_average(&eta, &grid));
    let (d_rf, b_rf) = euclid(exp.m(), &m_formula);
    let (d_rt, b_rt) = euclid(exp.m(), &m_transport);
    Ok([rel(tr, base), rel(d_rf, b_rf), rel(d_rt, b_rt)])
}

fn max_mean(xs: &[f64]) -> (f64, f64) {
    (xs.iter().copied().fold(0.0, f64::max), xs.iter().sum::<f64>() / xs.len().max(1) as f64)
}

/// `int_a^inf mu_eps` by composite Gauss-Legendre on `[a, a + 60 eps / delta]`.
fn tail_by_quadrature(kernel: &KernelSpec, a: f64) -> f64 {
    let span = 60.0 * kernel.epsilon() / kernel.delta();
    CompositeRule::new(&uniform_edges(a, a + span, 240), 8).integrate(|s| kernel.mu(s))
}

/// `mu(0) / (delta eps) exp(-delta t eps^(gamma - 1))`.
fn tail_bound(kernel: &KernelSpec, t: f64, gamma: f64) -> f64 {
    let (e, d) = (kernel.epsilon(), kernel.delta());
    kernel.base_at_origin() / (d * e) * (-d * t * e.powf(gamma - 1.0)).exp()
}

/// Error of `u(T)` against a fine-step reference for a deterministic single-mode linear system.
fn linear_order(kernel: &KernelSpec) -> Result<Vec<f64>, ExperimentError> {
    let domain = DomainSpec::with_modes(std::f64::consts::PI, 1)?;
    let spec = SystemSpec::new(
        domain,
        0.5,
        kernel.clone(),
        PotentialSpec::linear(-0.5)?,
        NoiseSpec::silent(1, 1)?,
        MemoryBackend::ExpReduction,
    )?;
    let horizon = 1.0;
    let run = |dt: f64| -> Result<f64, ExperimentError> {
        let mut st = Stepper::new(&spec, SystemKind::Memory, dt)?;
        let mut state = ExtendedState::constant_past(&spec, SpectralField::from_vec(vec![1.0]))?;
        let xi = [0.0];
        for _ in 0..(horizon / dt).round() as usize {
            st.step_with_normals(&mut state, &xi)?;
        }
        Ok(state.u.coeffs()[0])
    };
    let coarse = 1e-2;
    let reference = run(coarse / 1024.0)?;
    let errs: Vec<f64> = (0..4).map(|l| run(coarse / f64::from(1 << l)).map(|u| (u - reference).abs())).collect::<Result<_, _>>()?;
    Ok(errs.windows(2).map(|w| w[0] / w[1]).collect())
}

/// Runs the representation triangle over randomized drives at two resolutions,
/// the kernel-tail bound and the time-step order study.
pub fn run_oracle_validation(cfg: &ExperimentConfig) -> Result<OracleReport, ExperimentError> {
    cfg.validate()?;
    let seed = cfg.solver.seed;
    let eps = cfg.sorted_epsilons()[0];
    let mut outcome = Outcome::new(cfg.kind.id(), seed);
    let kernel = cfg.system.kernel.with_epsilon(eps)?;
    let domain = DomainSpec::with_modes(cfg.system.domain.length(), ORACLE_MODES)?;
    let horizon = cfg.horizon;
    let drives: Vec<Drive> = (0..cfg.ensemble).map(|i| Drive::random(seed, i)).collect();

    let mut levels = Vec::new();
    if kernel.is_exponential() {
        for dt in [cfg.solver.dt, 0.5 * cfg.solver.dt] {
            let errs = par_map(drives.len(), cfg.workers, |i| triangle_errors(&drives[i], &kernel, &domain, dt, horizon))?;
            let col = |j: usize| max_mean(&errs.iter().map(|e| e[j]).collect::<Vec<_>>());
            let level = TriangleLevel { dt, transport_vs_formula: col(0), reduction_vs_formula: col(1), reduction_vs_transport: col(2) };
            for (name, (max, mean)) in [
                ("transport_vs_formula", level.transport_vs_formula),
                ("reduction_vs_formula", level.reduction_vs_formula),
                ("reduction_vs_transport", level.reduction_vs_transport),
            ] {
                outcome.row(eps, dt, &format!("{name}_max"), max, 0.0, drives.len());
                outcome.row(eps, dt, &format!("{name}_mean"), mean, 0.0, drives.len());
                outcome.audit(
                    format!("{name} within {TRIANGLE_TOL} at dt={dt}"),
                    max < TRIANGLE_TOL,
                    format!("largest relative error {max:.3e}"),
                );
            }
            levels.push(level);
        }
        let (a, b) = (levels[0], levels[1]);
        for (name, r) in [
            ("transport_vs_formula", a.transport_vs_formula.1 / b.transport_vs_formula.1),
            ("reduction_vs_formula", a.reduction_vs_formula.1 / b.reduction_vs_formula.1),
        ] {
            outcome.summary.scalars.insert(format!("{name}_halving_ratio"), r);
            outcome.audit(
                format!("{name} error halves with (dt, ds)"),
                r >= ORDER_RANGE.0 && r <= ORDER_RANGE.1,
                format!("mean error ratio {r:.3}"),
            );
        }

        let zero = Drive { past: vec![0.0; DRIVEN_MODES], amp: vec![0.0; DRIVEN_MODES], freq: vec![1.0; DRIVEN_MODES], phase: vec![0.0; DRIVEN_MODES] };
        let z = triangle_errors(&zero, &kernel, &domain, cfg.solver.dt, horizon)?;
        outcome.audit("zero history stays zero", z.iter().all(|e| *e == 0.0), format!("{z:?}"));
    }

    let tail_kernel = cfg.system.kernel.with_epsilon(0.1)?;
    let mut tails = Vec::new();
    for gamma in TAIL_GAMMAS {
        let t = 1.0;
        let a = t * tail_kernel.epsilon().powf(gamma);
        let c = TailCheck { gamma, quadrature: tail_by_quadrature(&tail_kernel, a), bound: tail_bound(&tail_kernel, t, gamma) };
        outcome.row(0.1, t, &format!("tail_gamma{gamma:.4}"), c.quadrature, 0.0, 1);
        outcome.audit(
            format!("kernel tail bound at gamma={gamma:.4}"),
            c.holds(),
            format!("quadrature {:.6e} vs bound {:.6e}", c.quadrature, c.bound),
        );
        tails.push(c);
    }

    let order_ratios = if kernel.is_exponential() { linear_order(&kernel)? } else { Vec::new() };
    if !order_ratios.is_empty() {
        let ok = order_ratios.iter().all(|r| *r >= ORDER_RANGE.0 && *r <= ORDER_RANGE.1);
        outcome.audit("first-order self-convergence", ok, format!("error ratios {order_ratios:.3?}"));
    }
    Ok(OracleReport { outcome, levels, tails, order_ratios })
}
