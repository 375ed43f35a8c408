//! Polynomial reaction terms and their dissipativity constants.

use crate::error::SpectralError;

/// A polynomial potential `phi(x) = sum_i c_i x^i` with `c_0 = 0`.
///
/// Admissible forms are the zero map, linear maps, and odd-degree polynomials
/// of degree at least three with a negative leading coefficient. For the last
/// family the growth bound `|phi(x)| <= a1 (1 + |x|^p0)`, the dissipativity
/// bound `x phi(x) <= -a2 |x|^(p0+1) + a3` and `a_phi = sup phi'` all hold
/// with the constants computed here.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    coeffs: Vec<f64>,
    a_phi: f64,
    p0: usize,
    a1: f64,
    a2: f64,
    a3: f64,
}

impl PotentialSpec {
    /// Builds a potential from ascending coefficients `[c_0, c_1, ...]`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self, SpectralError> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(SpectralError::Potential("coefficients must be finite".into()));
        }
        let mut coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        if coeffs[0] != 0.0 {
            return Err(SpectralError::Potential(format!(
                "phi(0) must vanish, constant term is {}",
                coeffs[0]
            )));
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        let degree = coeffs.len() - 1;
        match degree {
            0 => Ok(Self { coeffs, a_phi: 0.0, p0: 1, a1: 0.0, a2: 0.0, a3: 0.0 }),
            1 => {
                let c = coeffs[1];
                Ok(Self { coeffs, a_phi: c, p0: 1, a1: c.abs(), a2: (-c).max(0.0), a3: 0.0 })
            }
            _ => {
                let lead = coeffs[degree];
                if degree % 2 == 0 || lead >= 0.0 {
                    return Err(SpectralError::Potential(format!(
                        "nonlinear potentials need odd degree and a negative leading coefficient \
                         (degree {degree}, leading coefficient {lead})"
                    )));
                }
                let mut spec = Self { coeffs, a_phi: 0.0, p0: degree, a1: 0.0, a2: 0.5 * lead.abs(), a3: 0.0 };
                spec.a_phi = spec.sup_derivative();
                spec.a3 = spec.sup_certificate();
                spec.a1 = spec.sup_growth_ratio();
                Ok(spec)
            }
        }
    }

    /// The Allen-Cahn reaction term `x - x^3`.
    pub fn allen_cahn() -> Self {
        Self::new(vec![0.0, 1.0, 0.0, -1.0]).expect("x - x^3 is admissible")
    }

    /// The zero potential.
    pub fn zero() -> Self {
        Self::new(vec![0.0]).expect("zero is admissible")
    }

    /// `phi(x) = c x`.
    pub fn linear(c: f64) -> Result<Self, SpectralError> {
        Self::new(vec![0.0, c])
    }

    /// Replaces the stored `a3`; used to build deliberately wrong certificates.
    pub fn with_a3(mut self, a3: f64) -> Self {
        self.a3 = a3;
        self
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn a_phi(&self) -> f64 {
        self.a_phi
    }

    pub fn p0(&self) -> usize {
        self.p0
    }

    /// Growth constant, also written `c_phi`.
    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn a3(&self) -> f64 {
        self.a3
    }

    /// True when the growth and dissipativity bounds hold with `p0 > 1`.
    pub fn is_superlinear(&self) -> bool {
        self.degree() >= 3
    }

    pub fn is_linear(&self) -> bool {
        self.degree() <= 1
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let d: Vec<f64> = self.coeffs.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        horner(&d, x)
    }

    /// `x phi(x) + a2 |x|^(p0+1) - a3`; nonpositive where the certificate holds.
    pub fn certificate_excess(&self, x: f64) -> f64 {
        x * self.eval(x) + self.a2 * x.abs().powi(self.p0 as i32 + 1) - self.a3
    }

    /// Minimum collocation size for an exactly dealiased projection.
    pub fn min_quadrature(&self, n_modes: usize) -> usize {
        ((self.degree().max(1) + 1) * n_modes).div_ceil(2)
    }

    fn sup_derivative(&self) -> f64 {
        let d: Vec<f64> = self.coeffs.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        let dd: Vec<f64> = d.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        let r = root_bound(&dd) + 1.0;
        maximize(|x| horner(&d, x), -r, r)
    }

    fn sup_certificate(&self) -> f64 {
        // g(x) = x phi(x) + a2 x^(p0+1); p0 is odd so |x|^(p0+1) is a polynomial.
        let mut g = vec![0.0; self.coeffs.len() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            g[i + 1] += c;
        }
        g[self.p0 + 1] += self.a2;
        let dg: Vec<f64> = g.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
        let r = root_bound(&dg) + 1.0;
        maximize(|x| horner(&g, x), -r, r).max(0.0)
    }

    fn sup_growth_ratio(&self) -> f64 {
        let lead = self.coeffs[self.degree()].abs();
        let r = root_bound(&self.coeffs) * 4.0 + 4.0;
        let p = self.p0 as i32;
        let inner = maximize(|x| self.eval(x).abs() / (1.0 + x.abs().powi(p)), -r, r);
        inner.max(lead)
    }
}

#[inline]
fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Cauchy bound on the moduli of the roots of a polynomial.
fn root_bound(c: &[f64]) -> f64 {
    let n = c.iter().rposition(|&a| a != 0.0).unwrap_or(0);
    if n == 0 {
        return 1.0;
    }
    let lead = c[n].abs();
    1.0 + c[..n].iter().map(|a| a.abs() / lead).fold(0.0, f64::max)
}

/// Grid scan followed by golden-section refinement around the best sample.
fn maximize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const SAMPLES: usize = 20_001;
    let h = (hi - lo) / (SAMPLES - 1) as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..SAMPLES {
        let v = f(lo + h * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut a = lo + h * best_i.saturating_sub(1) as f64;
    let mut b = (lo + h * (best_i + 1) as f64).min(hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    best.max(f1).max(f2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allen_cahn_constants() {
        let p = PotentialSpec::allen_cahn();
        assert!((p.a_phi() - 1.0).abs() < 1e-12);
        assert_eq!(p.p0(), 3);
        assert!((p.a2() - 0.5).abs() < 1e-15);
        assert!((p.a3() - 0.5).abs() < 1e-12);
        assert!((p.a1() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certificate_on_dense_grid() {
        let p = PotentialSpec::allen_cahn();
        for i in 0..=10_000 {
            let x = -10.0 + 20.0 * i as f64 / 10_000.0;
            assert!(p.certificate_excess(x) <= 1e-12, "x = {x}");
        }
    }

    #[test]
    fn quintic_constants_bound_the_samples() {
        let p = PotentialSpec::new(vec![0.0, 2.0, 0.5, -1.0, 0.0, -0.25]).unwrap();
        for i in 0..=20_000 {
            let x = -10.0 + 20.0 * i as f64 / 20_000.0;
            assert!(p.derivative(x) <= p.a_phi() + 1e-9);
            assert!(p.certificate_excess(x) <= 1e-9);
            assert!(p.eval(x).abs() <= p.a1() * (1.0 + x.abs().powi(5)) + 1e-9);
        }
    }

    #[test]
    fn rejects_inadmissible_potentials() {
        assert!(PotentialSpec::new(vec![1.0, 1.0]).is_err());
        assert!(PotentialSpec::new(vec![0.0, 1.0, 0.0, 1.0]).is_err());
        assert!(PotentialSpec::new(vec![0.0, 1.0, -1.0]).is_err());
    }

    #[test]
    fn linear_potentials() {
        let id = PotentialSpec::linear(1.0).unwrap();
        assert_eq!(id.a_phi(), 1.0);
        assert!(!id.is_superlinear());
        let z = PotentialSpec::zero();
        assert_eq!(z.degree(), 0);
        assert_eq!(z.eval(3.0), 0.0);
    }
}
