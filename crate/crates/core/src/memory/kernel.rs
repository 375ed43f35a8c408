//! Memory kernels `mu`, their rescalings `mu_eps(s) = eps^-2 mu(s / eps)` and
//! admissibility checks.

use crate::error::MemoryError;
use crate::quadrature::CompositeRule;

/// Relative tolerance on the first-moment normalisation.
pub const FIRST_MOMENT_TOL: f64 = 1e-8;

/// Base kernel shapes at `eps = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `mu(s) = delta^2 exp(-delta s)`.
    Exponential { delta: f64 },
    /// Log-linear interpolation of tabulated samples.
    Tabulated(KernelTable),
}

/// Samples `(s_i, mu(s_i))` with strictly increasing `s_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    s: Vec<f64>,
    mu: Vec<f64>,
    log_slopes: Vec<f64>,
    delta: f64,
}

impl KernelTable {
    /// With `delta = None` the largest rate compatible with every interval is used.
    pub fn new(s: Vec<f64>, mu: Vec<f64>, delta: Option<f64>) -> Result<Self, MemoryError> {
        if s.len() != mu.len() {
            return Err(MemoryError::Table(format!("{} nodes but {} values", s.len(), mu.len())));
        }
        if s.len() < 2 {
            return Err(MemoryError::Table("need at least two nodes".into()));
        }
        if s[0] < 0.0 || s.iter().any(|x| !x.is_finite()) {
            return Err(MemoryError::Table("nodes must be finite and nonnegative".into()));
        }
        if let Some(i) = s.windows(2).position(|w| w[1] <= w[0]) {
            return Err(MemoryError::Table(format!("nodes not strictly increasing at s = {}", s[i + 1])));
        }
        if let Some(i) = mu.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(MemoryError::Positivity { s: s[i] });
        }
        let log_slopes: Vec<f64> =
            s.windows(2).zip(mu.windows(2)).map(|(sw, mw)| (mw[1] / mw[0]).ln() / (sw[1] - sw[0])).collect();
        let delta = match delta {
            Some(d) if d.is_finite() && d > 0.0 => d,
            Some(d) => return Err(MemoryError::Table(format!("delta must be positive, got {d}"))),
            None => {
                let d = log_slopes.iter().map(|g| -g).fold(f64::INFINITY, f64::min);
                if d <= 0.0 {
                    let i = log_slopes.iter().position(|g| *g >= 0.0).unwrap_or(0);
                    return Err(MemoryError::Decay { s: s[i], excess: mu[i] * log_slopes[i] });
                }
                d
            }
        };
        Ok(Self { s, mu, log_slopes, delta })
    }

    /// Parses two-column `s mu(s)` text; blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str, delta: Option<f64>) -> Result<Self, MemoryError> {
        let mut s = Vec::new();
        let mut mu = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(|c: char| c.is_whitespace() || c == ',').filter(|c| !c.is_empty());
            let parse = |c: Option<&str>| -> Result<f64, MemoryError> {
                c.ok_or_else(|| MemoryError::Table(format!("line {}: expected two columns", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| MemoryError::Table(format!("line {}: {e}", lineno + 1)))
            };
            let a = parse(cols.next())?;
            let b = parse(cols.next())?;
            if cols.next().is_some() {
                return Err(MemoryError::Table(format!("line {}: expected two columns", lineno + 1)));
            }
            s.push(a);
            mu.push(b);
        }
        Self::new(s, mu, delta)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.s
    }

    pub fn values(&self) -> &[f64] {
        &self.mu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn tail_slope(&self) -> f64 {
        self.log_slopes.last().copied().unwrap_or(-self.delta).min(-self.delta)
    }

    fn locate(&self, s: f64) -> (f64, f64, f64) {
        // (anchor s, anchor mu, log slope) of the piece containing s.
        let n = self.s.len();
        if s <= self.s[0] {
            (self.s[0], self.mu[0], self.log_slopes[0])
        } else if s >= self.s[n - 1] {
            (self.s[n - 1], self.mu[n - 1], self.tail_slope())
        } else {
            let i = self.s.partition_point(|&x| x <= s) - 1;
            (self.s[i], self.mu[i], self.log_slopes[i])
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let (s0, m0, g) = self.locate(s);
        m0 * (g * (s - s0)).exp()
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let (s0, m0, g) = self.locate(s);
        g * m0 * (g * (s - s0)).exp()
    }

    fn support_end(&self) -> f64 {
        self.s[self.s.len() - 1] + 60.0 / (-self.tail_slope())
    }
}

/// Summary of an admissible kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCertificate {
    pub delta: f64,
    pub mass: f64,
    pub first_moment: f64,
    pub second_moment: f64,
    /// `int s^3 mu(s)^2 ds`.
    pub third_sq_moment: f64,
}

/// A base kernel, a multiplicative normalisation and the memory scale `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    epsilon: f64,
    normalization: f64,
}

/// `(s, weight, mu_eps(s))` triples integrating against `ds` on the kernel support.
#[derive(Debug, Clone)]
pub struct KernelQuadrature {
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    pub mu: Vec<f64>,
}

impl KernelQuadrature {
    /// `int mu_eps(s) f(s) ds`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.s.iter().zip(&self.w).zip(&self.mu).map(|((&s, &w), &m)| w * m * f(s)).sum()
    }
}

impl KernelSpec {
    pub fn exponential(delta: f64) -> Result<Self, MemoryError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(MemoryError::Table(format!("delta must be positive, got {delta}")));
        }
        Ok(Self { family: KernelFamily::Exponential { delta }, epsilon: 1.0, normalization: 1.0 })
    }

    pub fn tabulated(table: KernelTable) -> Self {
        Self { family: KernelFamily::Tabulated(table), epsilon: 1.0, normalization: 1.0 }
    }

    /// Multiplies the kernel by `c`; normalised kernels have `c = 1`.
    pub fn with_normalization(mut self, c: f64) -> Self {
        self.normalization = c;
        self
    }

    /// Chooses the normalisation that makes the first moment exactly 1.
    pub fn normalized(self) -> Self {
        let c = self.normalization;
        let m1 = self.quadrature().integrate(|s| s);
        self.with_normalization(c / m1)
    }

    /// The same base kernel at memory scale `epsilon`.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self, MemoryError> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(MemoryError::Epsilon(epsilon));
        }
        let mut k = self.clone();
        k.epsilon = epsilon;
        Ok(k)
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Base decay rate `delta`.
    pub fn delta(&self) -> f64 {
        match &self.family {
            KernelFamily::Exponential { delta } => *delta,
            KernelFamily::Tabulated(t) => t.delta,
        }
    }

    /// Decay rate `delta / eps` of the rescaled kernel.
    pub fn rate(&self) -> f64 {
        self.delta() / self.epsilon
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.family, KernelFamily::Exponential { .. })
    }

    fn base(&self, s: f64) -> f64 {
        match &self.family {
            KernelFamily::Exponential { delta } => delta * delta * (-delta * s).exp(),
            KernelFamily::Tabulated(t) => t.eval(s),
        }
    }

    fn base_derivative(&self, s: f64) -> f64 {
        match &self.family {
            KernelFamily::Exponential { delta } => -delta.powi(3) * (-delta * s).exp(),
            KernelFamily::Tabulated(t) => t.derivative(s),
        }
    }

    /// `mu_eps(s)`.
    pub fn mu(&self, s: f64) -> f64 {
        let e = self.epsilon;
        self.normalization * self.base(s / e) / (e * e)
    }

    /// `mu_eps'(s)`.
    pub fn mu_prime(&self, s: f64) -> f64 {
        let e = self.epsilon;
        self.normalization * self.base_derivative(s / e) / (e * e * e)
    }

    /// Value of the unscaled kernel at the origin, `mu(0)`.
    pub fn base_at_origin(&self) -> f64 {
        self.normalization * self.base(0.0)
    }

    /// Beyond this age the rescaled kernel is below `e^-60` of its scale.
    pub fn support_end(&self) -> f64 {
        let base = match &self.family {
            KernelFamily::Exponential { delta } => 60.0 / delta,
            KernelFamily::Tabulated(t) => t.support_end(),
        };
        self.epsilon * base
    }

    /// Composite 8-point Gauss-Legendre rule resolving the kernel scale.
    pub fn quadrature(&self) -> KernelQuadrature {
        let scale = 0.25 / self.delta();
        let mut breaks = vec![0.0];
        if let KernelFamily::Tabulated(t) = &self.family {
            breaks.extend(t.s.iter().copied().filter(|&s| s > 0.0));
        }
        let end = self.support_end() / self.epsilon;
        if end > *breaks.last().unwrap() {
            breaks.push(end);
        }
        let mut edges = vec![0.0];
        for w in breaks.windows(2) {
            let n = ((w[1] - w[0]) / scale).ceil().max(1.0) as usize;
            for i in 1..=n {
                edges.push(self.epsilon * (w[0] + (w[1] - w[0]) * i as f64 / n as f64));
            }
        }
        let rule = CompositeRule::new(&edges, 8);
        let mu = rule.nodes.iter().map(|&s| self.mu(s)).collect();
        KernelQuadrature { s: rule.nodes, w: rule.weights, mu }
    }

    /// `int_a^inf mu_eps(s) ds`.
    pub fn tail_mass(&self, a: f64) -> f64 {
        match &self.family {
            KernelFamily::Exponential { delta } => self.normalization * (delta / self.epsilon) * (-delta * a / self.epsilon).exp(),
            KernelFamily::Tabulated(_) => {
                let q = self.quadrature();
                q.s.iter().zip(&q.w).zip(&q.mu).filter(|((s, _), _)| **s >= a).map(|((_, w), m)| w * m).sum()
            }
        }
    }

    /// Closed-form mass `c delta / eps` of an exponential kernel.
    pub fn exponential_mass(&self) -> Result<f64, MemoryError> {
        match &self.family {
            KernelFamily::Exponential { delta } => Ok(self.normalization * delta / self.epsilon),
            KernelFamily::Tabulated(_) => Err(MemoryError::NotExponential),
        }
    }

    /// Largest violation of `mu_eps' + (delta / eps) mu_eps <= 0` over the nodes, if any.
    fn decay_violation(&self) -> Option<(f64, f64)> {
        match &self.family {
            KernelFamily::Exponential { .. } => None,
            KernelFamily::Tabulated(t) => {
                let n = t.s.len();
                for i in 0..n {
                    let g = if i + 1 < n { t.log_slopes[i] } else { t.log_slopes[n - 2] };
                    let excess = t.mu[i] * (g + t.delta);
                    if excess > 1e-12 * t.mu[i] * t.delta {
                        let e = self.epsilon;
                        return Some((t.s[i] * e, self.normalization * excess / (e * e * e)));
                    }
                }
                None
            }
        }
    }

    /// Checks positivity, the decay condition and the unit first moment.
    pub fn check_admissible(&self) -> Result<KernelCertificate, MemoryError> {
        if !(self.normalization.is_finite() && self.normalization > 0.0) {
            return Err(MemoryError::Positivity { s: 0.0 });
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(MemoryError::Epsilon(self.epsilon));
        }
        if let Some((s, excess)) = self.decay_violation() {
            return Err(MemoryError::Decay { s, excess });
        }
        let q = self.quadrature();
        let mass = q.integrate(|_| 1.0);
        let first = q.integrate(|s| s);
        let second = q.integrate(|s| s * s);
        let third_sq = q.s.iter().zip(&q.w).zip(&q.mu).map(|((s, w), m)| w * s.powi(3) * m * m).sum();
        if (first - 1.0).abs() > FIRST_MOMENT_TOL {
            return Err(MemoryError::FirstMoment { moment: first });
        }
        Ok(KernelCertificate { delta: self.delta(), mass, first_moment: first, second_moment: second, third_sq_moment: third_sq })
    }
}

/// `mu_eps(s) = eps^-2 mu(s / eps)` for a base kernel given at `eps = 1`.
pub fn rescale_kernel(base: &KernelSpec, epsilon: f64) -> Result<KernelSpec, MemoryError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(MemoryError::Epsilon(epsilon));
    }
    if base.epsilon != 1.0 {
        return Err(MemoryError::AlreadyRescaled(base.epsilon));
    }
    let mut k = base.clone();
    k.epsilon = epsilon;
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescaling_examples() {
        let base = KernelSpec::exponential(1.0).unwrap();
        let same = rescale_kernel(&base, 1.0).unwrap();
        assert!((same.mu(0.7) - (-0.7f64).exp()).abs() < 1e-15);
        let half = rescale_kernel(&base, 0.5).unwrap();
        assert!((half.mu(0.0) - 4.0).abs() < 1e-15);
        assert!((half.mu(0.3) - 4.0 * (-0.6f64).exp()).abs() < 1e-14);
        assert!(rescale_kernel(&base, 0.0).is_err());
        assert!(rescale_kernel(&base, 1.5).is_err());
        assert!(rescale_kernel(&half, 0.5).is_err());
    }

    #[test]
    fn exponential_certificates() {
        let c = KernelSpec::exponential(1.0).unwrap().check_admissible().unwrap();
        assert!((c.mass - 1.0).abs() < 1e-12);
        assert!((c.first_moment - 1.0).abs() < 1e-12);
        assert!((c.second_moment - 2.0).abs() < 1e-12);
        assert!((c.third_sq_moment - 0.375).abs() < 1e-12);
        let c2 = KernelSpec::exponential(2.0).unwrap().check_admissible().unwrap();
        assert!((c2.mass - 2.0).abs() < 1e-12);
        assert!((c2.first_moment - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unnormalised_kernel_is_rejected() {
        let k = KernelSpec::exponential(1.0).unwrap().with_normalization(2.0);
        assert!(matches!(k.check_admissible(), Err(MemoryError::FirstMoment { .. })));
    }

    #[test]
    fn tabulated_decay_violation_names_the_node() {
        let s = vec![0.0, 1.0, 2.0, 3.0];
        let mu = vec![1.0, (-1.0f64).exp(), (-1.5f64).exp(), (-2.5f64).exp()];
        let k = KernelSpec::tabulated(KernelTable::new(s, mu, Some(1.0)).unwrap());
        match k.check_admissible() {
            Err(MemoryError::Decay { s, .. }) => assert_eq!(s, 1.0),
            other => panic!("expected decay violation, got {other:?}"),
        }
    }

    #[test]
    fn tabulated_exponential_matches_closed_form() {
        let s: Vec<f64> = (0..=200).map(|i| i as f64 * 0.1).collect();
        let mu: Vec<f64> = s.iter().map(|x| (-x).exp()).collect();
        let k = KernelSpec::tabulated(KernelTable::new(s, mu, None).unwrap());
        let c = k.check_admissible().unwrap();
        assert!((c.delta - 1.0).abs() < 1e-12);
        assert!((c.second_moment - 2.0).abs() < 1e-9);
    }

    #[test]
    fn parse_table_text() {
        let text = "# s mu\n0 1\n1 0.3\n\n2 0.09\n";
        let t = KernelTable::parse(text, None).unwrap();
        assert_eq!(t.nodes(), &[0.0, 1.0, 2.0]);
        assert!(KernelTable::parse("0 1\n0 2\n", None).is_err());
        assert!(KernelTable::parse("0 1 3\n", None).is_err());
        assert!(KernelTable::parse("0 x\n", None).is_err());
    }
}
