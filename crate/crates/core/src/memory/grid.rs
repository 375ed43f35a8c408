//! Memory-age grids and their quadrature weights against `mu_eps(s) ds`.

use super::kernel::KernelSpec;
use crate::error::MemoryError;
use crate::quadrature::gauss_legendre;

/// Node count of the default geometric grid.
pub const DEFAULT_NODES: usize = 96;

/// Strictly increasing ages `s_1 < ... < s_n` with `s_0 = 0` implied.
///
/// Weights are the integrals of the piecewise-linear hat functions against
/// `mu_eps`, so `sum_j w_j f(s_j)` integrates the linear interpolant of `f`.
/// The origin hat is folded into the first node and mass beyond `s_n` is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryGrid {
    s: Vec<f64>,
    w: Vec<f64>,
    ds: Vec<f64>,
}

impl HistoryGrid {
    pub fn from_nodes(nodes: Vec<f64>, kernel: &KernelSpec) -> Result<Self, MemoryError> {
        if nodes.is_empty() {
            return Err(MemoryError::Grid("no nodes".into()));
        }
        if !(nodes[0] > 0.0) || nodes.iter().any(|s| !s.is_finite()) {
            return Err(MemoryError::Grid("nodes must be positive and finite".into()));
        }
        if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(MemoryError::Grid(format!("nodes not strictly increasing at index {}", i + 1)));
        }
        let n = nodes.len();
        let (gx, gw) = gauss_legendre(8);
        // int_a^b mu(s) * (linear from fa at a to fb at b) ds
        let hat = |a: f64, b: f64, fa: f64, fb: f64| -> f64 {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            gx.iter()
                .zip(&gw)
                .map(|(x, w)| {
                    let s = mid + half * x;
                    let t = (s - a) / (b - a);
                    half * w * kernel.mu(s) * (fa + (fb - fa) * t)
                })
                .sum()
        };
        let mut w = vec![0.0; n];
        let mut prev = 0.0;
        for j in 0..n {
            let left = hat(prev, nodes[j], 0.0, 1.0);
            let right = if j + 1 < n { hat(nodes[j], nodes[j + 1], 1.0, 0.0) } else { 0.0 };
            w[j] = left + right;
            prev = nodes[j];
        }
        w[0] += hat(0.0, nodes[0], 1.0, 0.0);
        let mut ds = Vec::with_capacity(n);
        let mut prev = 0.0;
        for &s in &nodes {
            ds.push(s - prev);
            prev = s;
        }
        Ok(Self { s: nodes, w, ds })
    }

    /// `n` geometrically spaced nodes from `s_min` to `s_max`.
    pub fn geometric(kernel: &KernelSpec, n: usize, s_min: f64, s_max: f64) -> Result<Self, MemoryError> {
        if n < 2 || !(s_min > 0.0 && s_max > s_min) {
            return Err(MemoryError::Grid(format!("bad geometric grid: n = {n}, range [{s_min}, {s_max}]")));
        }
        let ratio = (s_max / s_min).powf(1.0 / (n - 1) as f64);
        let nodes = (0..n).map(|i| if i + 1 == n { s_max } else { s_min * ratio.powi(i as i32) }).collect();
        Self::from_nodes(nodes, kernel)
    }

    /// The default grid: 96 nodes from `1e-3 eps` to `25 eps / delta`.
    pub fn default_for(kernel: &KernelSpec) -> Result<Self, MemoryError> {
        let e = kernel.epsilon();
        Self::geometric(kernel, DEFAULT_NODES, 1e-3 * e, 25.0 * e / kernel.delta())
    }

    /// Nodes `ds, 2 ds, ...` up to and including the last multiple not above `s_max`.
    pub fn uniform(kernel: &KernelSpec, ds: f64, s_max: f64) -> Result<Self, MemoryError> {
        if !(ds > 0.0 && s_max >= ds) {
            return Err(MemoryError::Grid(format!("bad uniform grid: ds = {ds}, s_max = {s_max}")));
        }
        let n = (s_max / ds + 1e-9).floor() as usize;
        Self::from_nodes((1..=n).map(|j| j as f64 * ds).collect(), kernel)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.s
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// `s_j - s_{j-1}` with `s_0 = 0`.
    pub fn spacings(&self) -> &[f64] {
        &self.ds
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s_max(&self) -> f64 {
        self.s[self.s.len() - 1]
    }

    pub fn min_spacing(&self) -> f64 {
        self.ds.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn total_weight(&self) -> f64 {
        self.w.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::kernel::rescale_kernel;

    #[test]
    fn weights_reproduce_mass() {
        for &eps in &[1.0, 0.5, 0.25, 0.1] {
            let k = rescale_kernel(&KernelSpec::exponential(1.0).unwrap(), eps).unwrap();
            let g = HistoryGrid::default_for(&k).unwrap();
            let mass = 1.0 / eps;
            assert!(((g.total_weight() - mass) / mass).abs() < 1e-6, "eps = {eps}");
            assert!(g.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn linear_history_first_moment_is_nearly_exact() {
        let k = rescale_kernel(&KernelSpec::exponential(1.0).unwrap(), 0.25).unwrap();
        let g = HistoryGrid::uniform(&k, 0.01, 6.25).unwrap();
        let m: f64 = g.nodes().iter().zip(g.weights()).map(|(s, w)| s * w).sum();
        // The folded origin hat adds about mu_eps(0) ds^2 / 2 = 8e-4.
        assert!((m - 1.0).abs() < 1e-3);
        assert!(m > 1.0);
    }

    #[test]
    fn rejects_bad_nodes() {
        let k = KernelSpec::exponential(1.0).unwrap();
        assert!(HistoryGrid::from_nodes(vec![0.0, 1.0], &k).is_err());
        assert!(HistoryGrid::from_nodes(vec![1.0, 0.5], &k).is_err());
        assert!(HistoryGrid::uniform(&k, 0.0, 1.0).is_err());
    }
}
