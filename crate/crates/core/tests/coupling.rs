use proptest::prelude::*;
use volterra_spde_core::coupling::{
    check_metric_ordering, check_triangle, dist_dn, dist_dnbeta, triangle_constant, wasserstein_upper, DistanceSpec, Level,
};
use volterra_spde_core::dynamics::{ExtendedState, MemoryBackend, SystemSpec};
use volterra_spde_core::memory::KernelSpec;
use volterra_spde_core::spectral::{DomainSpec, NoiseSpec, PotentialSpec, SpectralField};

const MODES: usize = 6;

fn grid_spec() -> SystemSpec {
    let domain = DomainSpec::with_modes(std::f64::consts::PI, MODES).unwrap();
    let kernel = KernelSpec::exponential(1.0).unwrap().with_epsilon(0.5).unwrap();
    let noise = NoiseSpec::power_law(MODES, 0.25, 2.0, 2).unwrap();
    SystemSpec::new(domain, 0.5, kernel, PotentialSpec::allen_cahn(), noise, MemoryBackend::Grid).unwrap()
}

/// Present value plus a past `u(-r) = a + b sin(w r)` per mode.
fn state_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    (
        prop::collection::vec(-1.5..1.5f64, MODES),
        prop::collection::vec(-1.0..1.0f64, MODES),
        prop::collection::vec(-1.0..1.0f64, MODES),
        0.1..3.0f64,
    )
}

fn build(spec: &SystemSpec, (u, a, b, w): &(Vec<f64>, Vec<f64>, Vec<f64>, f64)) -> ExtendedState {
    let w = *w;
    ExtendedState::from_past(spec, SpectralField::new(u.clone()).unwrap(), |r| {
        SpectralField::new(a.iter().zip(b).map(|(a, b)| a + b * (w * r).sin()).collect()).unwrap()
    })
}

fn dist_params() -> impl Strategy<Value = (f64, f64)> {
    (0.1..5.0f64, 0.001..0.2f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distance_axioms(x in state_strategy(), y in state_strategy(), (n, beta) in dist_params()) {
        let spec = grid_spec();
        let (a, b) = (build(&spec, &x), build(&spec, &y));
        for level in [Level::Marginal, Level::Extended] {
            let d = DistanceSpec::new(n, beta, level).unwrap();
            prop_assert_eq!(dist_dn(&a, &a, &spec, &d).unwrap(), 0.0);
            prop_assert_eq!(dist_dnbeta(&a, &a, &spec, &d).unwrap(), 0.0);
            let ab = dist_dnbeta(&a, &b, &spec, &d).unwrap();
            prop_assert!((ab - dist_dnbeta(&b, &a, &spec, &d).unwrap()).abs() <= 1e-14 * ab.max(1.0));
            let dn = dist_dn(&a, &b, &spec, &d).unwrap();
            prop_assert!((0.0..=1.0).contains(&dn));
            // d_N <= d_{N,beta}^2 / 3, since the weight is at least 3.
            prop_assert!(dn * 3.0 <= ab * ab * (1.0 + 1e-12));
        }
    }

    #[test]
    fn ordering_and_triangle(x in state_strategy(), y in state_strategy(), z in state_strategy(), (n, beta) in dist_params()) {
        let spec = grid_spec();
        let (a, b, c) = (build(&spec, &x), build(&spec, &y), build(&spec, &z));
        let d = DistanceSpec::new(n, beta, Level::Extended).unwrap();
        let o = check_metric_ordering(&a, &b, &spec, &d).unwrap();
        prop_assert!(o.holds(), "{:?}", o);
        for level in [Level::Marginal, Level::Extended] {
            let d = DistanceSpec::new(n, beta, level).unwrap();
            let t = check_triangle(&a, &b, &c, &spec, &d).unwrap();
            prop_assert!(t.holds(), "{:?}", t);
        }
    }
}

#[test]
fn triangle_constant_switches_at_small_n() {
    let d = DistanceSpec::new(1.0, 0.05, Level::Marginal).unwrap();
    assert_eq!(triangle_constant(&d), 2.0);
    let d = DistanceSpec::new(0.1, 2.0, Level::Marginal).unwrap();
    assert!((triangle_constant(&d) - 100f64.exp()).abs() < 1e-6 * 100f64.exp());
}

#[test]
fn wasserstein_bound_never_exceeds_mismatch_probability() {
    let spec = grid_spec();
    let d = DistanceSpec::new(1.0, 0.05, Level::Marginal).unwrap();
    let pairs: Vec<(ExtendedState, ExtendedState)> = (0..200)
        .map(|i| {
            let u = SpectralField::mode(MODES, 1 + i % MODES, 0.01 * i as f64);
            let v = if i % 3 == 0 { u.clone() } else { SpectralField::mode(MODES, 1, 3.0) };
            let s = |f: SpectralField| ExtendedState::from_past(&spec, f.clone(), |_| f.clone());
            (s(u), s(v))
        })
        .collect();
    let w = wasserstein_upper(&pairs, |a, b| dist_dn(a, b, &spec, &d)).unwrap();
    let mismatch = pairs.iter().filter(|(a, b)| a.u != b.u).count() as f64 / pairs.len() as f64;
    assert!(w.mean <= mismatch, "{} vs {mismatch}", w.mean);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(DistanceSpec::new(0.0, 0.05, Level::Marginal).is_err());
    assert!(DistanceSpec::new(1.0, -1.0, Level::Marginal).is_err());
}
