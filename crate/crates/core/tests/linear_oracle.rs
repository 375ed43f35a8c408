use nalgebra::{Matrix2, Vector2};
use volterra_spde_core::dynamics::{ExtendedState, MemoryBackend, NoiseStream, Stepper, SystemKind, SystemSpec};
use volterra_spde_core::memory::KernelSpec;
use volterra_spde_core::spectral::{DomainSpec, NoiseSpec, PotentialSpec, SpectralField};

const KAPPA: f64 = 0.5;
const SLOPE: f64 = -0.5;

/// One mode on `(0, pi)`, so `alpha_1 = 1`, with `phi(x) = -x / 2` and no noise.
fn single_mode(epsilon: f64) -> SystemSpec {
    let domain = DomainSpec::with_modes(std::f64::consts::PI, 1).unwrap();
    let kernel = KernelSpec::exponential(1.0).unwrap().with_epsilon(epsilon).unwrap();
    SystemSpec::new(domain, KAPPA, kernel, PotentialSpec::linear(SLOPE).unwrap(), NoiseSpec::silent(1, 1).unwrap(), MemoryBackend::ExpReduction)
        .unwrap()
}

/// `(u, m)` obeys `u' = -kappa alpha u - (1 - kappa) alpha m + c u`, `m' = -r m + M u`,
/// with `M = r = delta / eps` for the normalized exponential kernel.
fn exact(epsilon: f64, t: f64, u0: f64) -> f64 {
    let r = 1.0 / epsilon;
    let a = Matrix2::new(-KAPPA + SLOPE, -(1.0 - KAPPA), r, -r);
    // Constant past: m(0) = int mu_eps(s) s u0 ds = u0.
    ((a * t).exp() * Vector2::new(u0, u0))[0]
}

fn simulate(epsilon: f64, dt: f64, t: f64, u0: f64) -> f64 {
    let spec = single_mode(epsilon);
    let mut stepper = Stepper::new(&spec, SystemKind::Memory, dt).unwrap();
    let mut state = ExtendedState::constant_past(&spec, SpectralField::new(vec![u0]).unwrap()).unwrap();
    for _ in 0..(t / dt).round() as usize {
        stepper.step_with_normals(&mut state, &[0.0]).unwrap();
    }
    state.u.coeffs()[0]
}

#[test]
fn matrix_exponential_oracle_is_frozen() {
    // Computed once with the nalgebra exponential and cross-checked against the
    // eigen-decomposition; both eigenvalues of `a` at eps = 1 are -1 +- i/sqrt(2).
    let frozen = 0.110_688_269_697_705_2;
    assert!((exact(1.0, 1.0, 1.0) - frozen).abs() < 1e-14, "{}", exact(1.0, 1.0, 1.0));
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let closed = (-1.0f64).exp() * (w.cos() - (0.5 / w) * w.sin());
    assert!((closed - frozen).abs() < 1e-14);
}

#[test]
fn first_order_convergence_against_matrix_exponential() {
    for epsilon in [1.0, 0.25] {
        let want = exact(epsilon, 1.0, 1.0);
        let errs: Vec<f64> = (0..4).map(|l| (simulate(epsilon, 1e-2 / f64::from(1 << l), 1.0, 1.0) - want).abs()).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.8..=2.2).contains(&ratio), "eps {epsilon}: errors {errs:?}");
        }
    }
}

#[test]
fn ornstein_uhlenbeck_variance_matches_discrete_closed_form() {
    let n = 3;
    let dt = 1e-2;
    let domain = DomainSpec::with_modes(std::f64::consts::PI, n).unwrap();
    let noise = NoiseSpec::new(vec![0.5, 0.4, 0.3], 1).unwrap();
    let spec = SystemSpec::new(domain, 0.5, KernelSpec::exponential(1.0).unwrap(), PotentialSpec::zero(), noise, MemoryBackend::Memoryless)
        .unwrap();
    let stepper = Stepper::new(&spec, SystemKind::Memoryless, dt).unwrap();
    let paths = 4000;
    let mut sums = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for i in 0..paths {
        let mut st = stepper.clone();
        let mut state = ExtendedState::zero(&spec);
        let mut rng = NoiseStream::new(11, i);
        for _ in 0..1000 {
            st.step(&mut state, &mut rng).unwrap();
        }
        for k in 0..n {
            let x = state.u.coeffs()[k].powi(2);
            sums[k] += x;
            sq[k] += x * x;
        }
    }
    for k in 0..n {
        let alpha = ((k + 1) as f64).powi(2);
        let q = spec.noise.q()[k];
        // Implicit Euler: Var = q^2 dt / ((1 + alpha dt)^2 - 1), transient below 1e-8.
        let want = q * q / (alpha * (2.0 + alpha * dt));
        let mean = sums[k] / paths as f64;
        let se = ((sq[k] / paths as f64 - mean * mean) / paths as f64).sqrt();
        assert!((mean - want).abs() <= 3.0 * se, "mode {}: {mean} vs {want} (se {se})", k + 1);
    }
}
