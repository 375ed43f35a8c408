//! The history variable `eta(t, s) = int_0^s u(t - r) dr` sampled on a grid.

use ndarray::{Array2, Axis};

use super::grid::HistoryGrid;
use super::kernel::KernelSpec;
use crate::error::MemoryError;
use crate::quadrature::gauss_legendre;
use crate::spectral::{DomainSpec, SpectralField};

/// Coefficients `values[[k, j]] = <eta(s_j), e_{k+1}>`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryField {
    values: Array2<f64>,
}

impl HistoryField {
    pub fn zeros(n_modes: usize, n_nodes: usize) -> Self {
        Self { values: Array2::zeros((n_modes, n_nodes)) }
    }

    pub fn from_array(values: Array2<f64>) -> Self {
        Self { values }
    }

    /// `eta(s) = u` for every node. Not in the transport domain; used for norm checks.
    pub fn constant(u: &SpectralField, n_nodes: usize) -> Self {
        let mut values = Array2::zeros((u.len(), n_nodes));
        for (mut row, &c) in values.axis_iter_mut(Axis(0)).zip(u.coeffs()) {
            row.fill(c);
        }
        Self { values }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn n_modes(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.values.ncols()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { values: &self.values - &other.values }
    }

    /// Coefficients of `eta(s)` for an arbitrary age by linear interpolation, `eta(0) = 0`.
    pub fn interpolate(&self, grid: &HistoryGrid, s: f64) -> Vec<f64> {
        let nodes = grid.nodes();
        let n = nodes.len();
        if s <= 0.0 {
            return vec![0.0; self.n_modes()];
        }
        if s >= nodes[n - 1] {
            return self.values.column(n - 1).to_vec();
        }
        let j = nodes.partition_point(|&x| x <= s);
        let (s0, s1) = (if j == 0 { 0.0 } else { nodes[j - 1] }, nodes[j]);
        let t = (s - s0) / (s1 - s0);
        (0..self.n_modes())
            .map(|k| {
                let a = if j == 0 { 0.0 } else { self.values[[k, j - 1]] };
                a + t * (self.values[[k, j]] - a)
            })
            .collect()
    }

    fn check(&self, grid: &HistoryGrid, domain: Option<&DomainSpec>) -> Result<(), MemoryError> {
        if self.n_nodes() != grid.len() {
            return Err(MemoryError::Dimension { expected: grid.len(), got: self.n_nodes() });
        }
        if let Some(d) = domain {
            if self.n_modes() != d.n_modes() {
                return Err(MemoryError::Dimension { expected: d.n_modes(), got: self.n_modes() });
            }
        }
        Ok(())
    }
}

/// `||eta||^2` in the weighted space of order `beta`: `sum_j w_j sum_k alpha_k^(1+beta) eta_kj^2`.
pub fn weighted_norm_sq(eta: &HistoryField, beta: u8, grid: &HistoryGrid, domain: &DomainSpec) -> Result<f64, MemoryError> {
    if beta > 1 {
        return Err(MemoryError::NormOrder(beta));
    }
    eta.check(grid, Some(domain))?;
    let w = grid.weights();
    Ok(eta
        .values
        .axis_iter(Axis(0))
        .enumerate()
        .map(|(k, row)| {
            let a = domain.alpha(k).powi(1 + beta as i32);
            a * row.iter().zip(w).map(|(e, w)| w * e * e).sum::<f64>()
        })
        .sum())
}

pub fn weighted_norm(eta: &HistoryField, beta: u8, grid: &HistoryGrid, domain: &DomainSpec) -> Result<f64, MemoryError> {
    weighted_norm_sq(eta, beta, grid, domain).map(f64::sqrt)
}

/// `m_k = sum_j w_j eta_kj`, the kernel average of each mode.
pub fn kernel_average(eta: &HistoryField, grid: &HistoryGrid) -> Vec<f64> {
    let w = grid.weights();
    eta.values.axis_iter(Axis(0)).map(|row| row.iter().zip(w).map(|(e, w)| w * e).sum()).collect()
}

/// `g_k = alpha_k sum_j w_j eta_kj`; the caller subtracts `(1 - kappa) g`.
pub fn memory_drift_grid(eta: &HistoryField, grid: &HistoryGrid, domain: &DomainSpec) -> Result<SpectralField, MemoryError> {
    eta.check(grid, Some(domain))?;
    let m = kernel_average(eta, grid);
    Ok(SpectralField::from_vec(m.iter().enumerate().map(|(k, m)| domain.alpha(k) * m).collect()))
}

/// Largest stable upwind step, `min_j (s_j - s_{j-1})`.
pub fn max_transport_dt(grid: &HistoryGrid) -> f64 {
    grid.min_spacing()
}

/// One explicit upwind step of `d_t eta = -d_s eta + u` with `eta(t, 0) = 0`.
pub fn transport_step(eta: &HistoryField, u: &SpectralField, dt: f64, grid: &HistoryGrid) -> Result<HistoryField, MemoryError> {
    let mut next = eta.clone();
    transport_step_in_place(&mut next, u.coeffs(), dt, grid)?;
    Ok(next)
}

pub fn transport_step_in_place(eta: &mut HistoryField, u: &[f64], dt: f64, grid: &HistoryGrid) -> Result<(), MemoryError> {
    eta.check(grid, None)?;
    if u.len() != eta.n_modes() {
        return Err(MemoryError::Dimension { expected: eta.n_modes(), got: u.len() });
    }
    let max_dt = max_transport_dt(grid);
    if dt > max_dt * (1.0 + 1e-12) {
        return Err(MemoryError::Cfl { dt, max_dt });
    }
    let ds = grid.spacings();
    for (mut row, &uk) in eta.values.axis_iter_mut(Axis(0)).zip(u) {
        let row = row.as_slice_mut().expect("history rows are contiguous");
        for j in (0..row.len()).rev() {
            let upstream = if j == 0 { 0.0 } else { row[j - 1] };
            row[j] += -(dt / ds[j]) * (row[j] - upstream) + dt * uk;
        }
    }
    Ok(())
}

/// Samples of a drive `u` at `t_i = i dt`, linearly interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivePath {
    dt: f64,
    values: Vec<SpectralField>,
}

impl DrivePath {
    pub fn new(dt: f64, values: Vec<SpectralField>) -> Result<Self, MemoryError> {
        if !(dt > 0.0) || values.is_empty() {
            return Err(MemoryError::Grid("drive path needs dt > 0 and at least one sample".into()));
        }
        let n = values[0].len();
        if let Some(v) = values.iter().find(|v| v.len() != n) {
            return Err(MemoryError::Dimension { expected: n, got: v.len() });
        }
        Ok(Self { dt, values })
    }

    /// Samples `f` on `[0, horizon]`.
    pub fn sample(dt: f64, horizon: f64, f: impl Fn(f64) -> SpectralField) -> Result<Self, MemoryError> {
        let n = (horizon / dt).round() as usize;
        Self::new(dt, (0..=n).map(|i| f(i as f64 * dt)).collect())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[SpectralField] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    /// Cumulative trapezoid integrals `C_i = int_0^{t_i} u`.
    fn cumulative(&self) -> Vec<Vec<f64>> {
        let n = self.values[0].len();
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = vec![0.0; n];
        out.push(acc.clone());
        for w in self.values.windows(2) {
            for ((a, x), y) in acc.iter_mut().zip(w[0].coeffs()).zip(w[1].coeffs()) {
                *a += 0.5 * self.dt * (x + y);
            }
            out.push(acc.clone());
        }
        out
    }
}

/// `int_0^tau u` for the piecewise-linear interpolant of the samples.
fn integral_to(path: &DrivePath, cum: &[Vec<f64>], tau: f64) -> Vec<f64> {
    let h = path.dt;
    let last = cum.len() - 1;
    let i = ((tau / h).floor() as usize).min(last.saturating_sub(1));
    let theta = (tau - i as f64 * h).clamp(0.0, h);
    if last == 0 {
        return cum[0].clone();
    }
    let (u0, u1) = (path.values[i].coeffs(), path.values[i + 1].coeffs());
    cum[i]
        .iter()
        .zip(u0)
        .zip(u1)
        .map(|((c, a), b)| c + theta * a + theta * theta / (2.0 * h) * (b - a))
        .collect()
}

/// Evaluates `eta(t, s) = eta_0(s - t) + int_0^{min(s,t)} u(t - r) dr` on the grid.
pub fn history_representation(path: &DrivePath, eta0: &HistoryField, t: f64, grid: &HistoryGrid) -> Result<HistoryField, MemoryError> {
    eta0.check(grid, None)?;
    if path.horizon() + 1e-12 * path.dt < t {
        return Err(MemoryError::PathTooShort { covered: path.horizon(), needed: t });
    }
    if path.values[0].len() != eta0.n_modes() {
        return Err(MemoryError::Dimension { expected: eta0.n_modes(), got: path.values[0].len() });
    }
    let cum = path.cumulative();
    let total = integral_to(path, &cum, t);
    let mut out = HistoryField::zeros(eta0.n_modes(), grid.len());
    for (j, &s) in grid.nodes().iter().enumerate() {
        let col: Vec<f64> = if s <= t {
            let before = integral_to(path, &cum, t - s);
            total.iter().zip(&before).map(|(a, b)| a - b).collect()
        } else {
            let shifted = eta0.interpolate(grid, s - t);
            total.iter().zip(&shifted).map(|(a, b)| a + b).collect()
        };
        for (k, v) in col.into_iter().enumerate() {
            out.values[[k, j]] = v;
        }
    }
    Ok(out)
}

/// Kernel-weighted H1 mass of `eta` outside `(1/r, r)`.
pub fn tail_functional(eta: &HistoryField, r: f64, grid: &HistoryGrid, domain: &DomainSpec) -> Result<f64, MemoryError> {
    if !(r >= 1.0) {
        return Err(MemoryError::TailRadius(r));
    }
    eta.check(grid, Some(domain))?;
    let (lo, hi) = (1.0 / r, r);
    let mut total = 0.0;
    for (j, (&s, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        if s > lo && s < hi {
            continue;
        }
        total += w * (0..eta.n_modes()).map(|k| domain.alpha(k) * eta.values[[k, j]].powi(2)).sum::<f64>();
    }
    Ok(total)
}

/// `eta_0(s_j) = int_0^{s_j} u_past(r) dr` from a past trajectory `r -> u(-r)`.
pub fn init_history_from_past(u_past: impl Fn(f64) -> SpectralField, n_modes: usize, grid: &HistoryGrid) -> HistoryField {
    let (gx, gw) = gauss_legendre(4);
    let mut out = HistoryField::zeros(n_modes, grid.len());
    let mut acc = vec![0.0; n_modes];
    let mut prev = 0.0;
    for (j, &s) in grid.nodes().iter().enumerate() {
        let (mid, half) = (0.5 * (prev + s), 0.5 * (s - prev));
        for (x, w) in gx.iter().zip(&gw) {
            let u = u_past(mid + half * x);
            for (a, c) in acc.iter_mut().zip(u.coeffs()) {
                *a += half * w * c;
            }
        }
        for (k, a) in acc.iter().enumerate() {
            out.values[[k, j]] = *a;
        }
        prev = s;
    }
    out
}

/// Sides of the transport dissipation inequality on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationCheck {
    /// `<-d_s eta, eta>` in the order-zero weighted space, by centred differences.
    pub flux: f64,
    /// `1/2 int mu' ||A^{1/2} eta||^2`, by trapezoid on the nodes.
    pub kernel_form: f64,
    /// `-(delta / 2 eps) ||eta||^2`.
    pub bound: f64,
}

pub fn transport_dissipation(eta: &HistoryField, grid: &HistoryGrid, kernel: &KernelSpec, domain: &DomainSpec) -> Result<DissipationCheck, MemoryError> {
    eta.check(grid, Some(domain))?;
    let s = grid.nodes();
    let n = s.len();
    // Energy density f(s_j) = ||A^{1/2} eta(s_j)||^2 and its s-derivative.
    let f: Vec<f64> = (0..n).map(|j| (0..eta.n_modes()).map(|k| domain.alpha(k) * eta.values[[k, j]].powi(2)).sum()).collect();
    let mut flux = 0.0;
    for j in 0..n {
        let (sl, el) = if j == 0 { (0.0, None) } else { (s[j - 1], Some(j - 1)) };
        let (sr, er) = if j + 1 < n { (s[j + 1], Some(j + 1)) } else { (s[j], Some(j)) };
        let mut dens = 0.0;
        for k in 0..eta.n_modes() {
            let left = el.map_or(0.0, |i| eta.values[[k, i]]);
            let right = er.map_or(0.0, |i| eta.values[[k, i]]);
            let d = (right - left) / (sr - sl);
            dens += domain.alpha(k) * d * eta.values[[k, j]];
        }
        flux -= grid.weights()[j] * dens;
    }
    let mut kernel_form = 0.0;
    let mut prev = (0.0, 0.0);
    for j in 0..n {
        let cur = (s[j], kernel.mu_prime(s[j]) * f[j]);
        kernel_form += 0.5 * (cur.0 - prev.0) * (cur.1 + prev.1);
        prev = cur;
    }
    kernel_form *= 0.5;
    let norm = weighted_norm_sq(eta, 0, grid, domain)?;
    Ok(DissipationCheck { flux, kernel_form, bound: -0.5 * kernel.rate() * norm })
}

/// `||T eta||` in the order-zero weighted space with `T = -d_s`, by backward differences.
pub fn generator_norm(eta: &HistoryField, grid: &HistoryGrid, domain: &DomainSpec) -> Result<f64, MemoryError> {
    eta.check(grid, Some(domain))?;
    let ds = grid.spacings();
    let mut total = 0.0;
    for (j, &w) in grid.weights().iter().enumerate() {
        let mut dens = 0.0;
        for k in 0..eta.n_modes() {
            let prev = if j == 0 { 0.0 } else { eta.values[[k, j - 1]] };
            let d = (eta.values[[k, j]] - prev) / ds[j];
            dens += domain.alpha(k) * d * d;
        }
        total += w * dens;
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::kernel::rescale_kernel;
    use std::f64::consts::PI;

    fn setup(eps: f64) -> (DomainSpec, KernelSpec, HistoryGrid) {
        let d = DomainSpec::with_modes(PI, 4).unwrap();
        let k = rescale_kernel(&KernelSpec::exponential(1.0).unwrap(), eps).unwrap();
        let g = HistoryGrid::default_for(&k).unwrap();
        (d, k, g)
    }

    #[test]
    fn constant_history_norms() {
        let (d, _, g) = setup(1.0);
        let eta = HistoryField::constant(&SpectralField::mode(4, 1, 1.0), g.len());
        assert!((weighted_norm_sq(&eta, 0, &g, &d).unwrap() - 1.0).abs() < 1e-4);
        let (d, _, g) = setup(0.5);
        let eta = HistoryField::constant(&SpectralField::mode(4, 1, 1.0), g.len());
        assert!((weighted_norm(&eta, 0, &g, &d).unwrap() - 2f64.sqrt()).abs() < 1e-4 * 2f64.sqrt());
        let drift = memory_drift_grid(&HistoryField::constant(&SpectralField::mode(4, 1, 1.0), g.len()), &g, &d).unwrap();
        assert!((drift.coeffs()[0] - 2.0).abs() < 1e-4);
        assert_eq!(weighted_norm(&HistoryField::zeros(4, g.len()), 1, &g, &d).unwrap(), 0.0);
        assert!(weighted_norm(&eta, 2, &g, &d).is_err());
    }

    #[test]
    fn transport_cfl_is_enforced() {
        let (_, _, g) = setup(1.0);
        let eta = HistoryField::zeros(4, g.len());
        let err = transport_step(&eta, &SpectralField::zeros(4), 1.0, &g).unwrap_err();
        assert!(matches!(err, MemoryError::Cfl { .. }));
    }

    #[test]
    fn transport_from_rest_builds_linear_ramp() {
        let (_, k, _) = setup(1.0);
        let g = HistoryGrid::uniform(&k, 0.01, 5.0).unwrap();
        let mut eta = HistoryField::zeros(4, g.len());
        let u = SpectralField::mode(4, 1, 1.0);
        for _ in 0..100 {
            transport_step_in_place(&mut eta, u.coeffs(), 0.01, &g).unwrap();
        }
        // With unit CFL upwinding is an exact shift, so the ramp is min(s, t).
        for (j, &s) in g.nodes().iter().enumerate() {
            assert!((eta.values()[[0, j]] - s.min(1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn free_transport_decays() {
        let (d, k, _) = setup(1.0);
        let g = HistoryGrid::uniform(&k, 0.02, 25.0).unwrap();
        let mut eta = init_history_from_past(|r| SpectralField::mode(4, 2, (-r).exp()), 4, &g);
        let zero = [0.0; 4];
        let mut last = weighted_norm(&eta, 0, &g, &d).unwrap();
        for _ in 0..200 {
            transport_step_in_place(&mut eta, &zero, 0.01, &g).unwrap();
            let now = weighted_norm(&eta, 0, &g, &d).unwrap();
            assert!(now <= last);
            last = now;
        }
    }

    #[test]
    fn representation_of_constant_drive() {
        let (_, _, g) = setup(1.0);
        let path = DrivePath::sample(0.01, 1.0, |_| SpectralField::mode(4, 1, 1.0)).unwrap();
        let eta = history_representation(&path, &HistoryField::zeros(4, g.len()), 1.0, &g).unwrap();
        for (j, &s) in g.nodes().iter().enumerate() {
            assert!((eta.values()[[0, j]] - s.min(1.0)).abs() < 1e-12);
        }
        assert!(history_representation(&path, &HistoryField::zeros(4, g.len()), 1.5, &g).is_err());
        let eta0 = init_history_from_past(|r| SpectralField::mode(4, 3, r.cos()), 4, &g);
        let same = history_representation(&path, &eta0, 0.0, &g).unwrap();
        assert!(same.sub(&eta0).values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn past_initialisation() {
        let (_, _, g) = setup(1.0);
        let zero = init_history_from_past(|_| SpectralField::zeros(4), 4, &g);
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let ramp = init_history_from_past(|_| SpectralField::mode(4, 1, 1.0), 4, &g);
        let decay = init_history_from_past(|r| SpectralField::mode(4, 1, (-r).exp()), 4, &g);
        for (j, &s) in g.nodes().iter().enumerate() {
            assert!((ramp.values()[[0, j]] - s).abs() < 1e-12);
            assert!((decay.values()[[0, j]] - (1.0 - (-s).exp())).abs() < 1e-6);
        }
    }

    #[test]
    fn tail_functional_examples() {
        let (d, _, g) = setup(1.0);
        assert_eq!(tail_functional(&HistoryField::zeros(4, g.len()), 3.0, &g, &d).unwrap(), 0.0);
        let eta = init_history_from_past(|r| SpectralField::mode(4, 2, r.sin()), 4, &g);
        let full = weighted_norm_sq(&eta, 0, &g, &d).unwrap();
        assert!((tail_functional(&eta, 1.0, &g, &d).unwrap() - full).abs() < 1e-12 * full);
        assert!(tail_functional(&eta, 0.5, &g, &d).is_err());
    }
}
