//! Least-squares fits used by the campaigns.

use serde::Serialize;

use crate::error::ExperimentError;

/// Straight-line fit `y = slope x + intercept`, typically on log-log or semi-log axes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Monte-Carlo half-width of each point on the original (unlogged) scale.
    pub half_widths: Vec<f64>,
}

impl RateFit {
    pub fn fit(xs: &[f64], ys: &[f64], half_widths: Vec<f64>) -> Result<Self, ExperimentError> {
        if xs.len() != ys.len() {
            return Err(ExperimentError::Config("fit abscissae and ordinates differ in length".into()));
        }
        if xs.len() < 3 {
            return Err(ExperimentError::Fit { need: 3, got: xs.len() });
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let slope = sxy / sxx;
        if !slope.is_finite() {
            return Err(ExperimentError::Config("degenerate fit: abscissae coincide or values are not finite".into()));
        }
        let intercept = my - slope * mx;
        let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
        Ok(Self { points: xs.iter().copied().zip(ys.iter().copied()).collect(), slope, intercept, r2, half_widths })
    }

    /// Fit of `log y` against `log x`.
    pub fn log_log(xs: &[f64], ys: &[f64], half_widths: Vec<f64>) -> Result<Self, ExperimentError> {
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        Self::fit(&lx, &ly, half_widths)
    }

    /// Fit of `log y` against `t`; `-slope` is the decay rate.
    pub fn semi_log(ts: &[f64], ys: &[f64], half_widths: Vec<f64>) -> Result<Self, ExperimentError> {
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        Self::fit(ts, &ly, half_widths)
    }

    pub fn decay_rate(&self) -> f64 {
        -self.slope
    }
}

/// `y(t) ~ asymptote + amplitude e^{-rate t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpTailFit {
    pub asymptote: f64,
    pub amplitude: f64,
    pub rate: f64,
    pub rss: f64,
}

/// Fits `c + a e^{-r t}` by linear least squares in `(c, a)` on a log-spaced scan of `r`,
/// refined by golden-section search around the best scanned rate.
pub fn fit_exponential_tail(ts: &[f64], ys: &[f64]) -> Result<ExpTailFit, ExperimentError> {
    if ts.len() != ys.len() || ts.len() < 3 {
        return Err(ExperimentError::Fit { need: 3, got: ts.len().min(ys.len()) });
    }
    let solve = |r: f64| -> ExpTailFit {
        let n = ts.len() as f64;
        let e: Vec<f64> = ts.iter().map(|t| (-r * t).exp()).collect();
        let (se, see) = (e.iter().sum::<f64>(), e.iter().map(|x| x * x).sum::<f64>());
        let (sy, sey) = (ys.iter().sum::<f64>(), e.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>());
        let det = n * see - se * se;
        let (c, a) = if det.abs() < 1e-300 { (sy / n, 0.0) } else { ((see * sy - se * sey) / det, (n * sey - se * sy) / det) };
        let rss = ts.iter().zip(ys).zip(&e).map(|((_, y), x)| (y - c - a * x).powi(2)).sum();
        ExpTailFit { asymptote: c, amplitude: a, rate: r, rss }
    };
    let grid: Vec<f64> = (0..=80).map(|i| 10f64.powf(-3.0 + 5.0 * i as f64 / 80.0)).collect();
    let (mut best_i, mut best) = (0, solve(grid[0]));
    for (i, &r) in grid.iter().enumerate().skip(1) {
        let f = solve(r);
        if f.rss < best.rss {
            best_i = i;
            best = f;
        }
    }
    let (mut lo, mut hi) = (grid[best_i.saturating_sub(1)].ln(), grid[(best_i + 1).min(grid.len() - 1)].ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let (a, b) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if solve(a.exp()).rss <= solve(b.exp()).rss {
            hi = b;
        } else {
            lo = a;
        }
    }
    let refined = solve((0.5 * (lo + hi)).exp());
    Ok(if refined.rss <= best.rss { refined } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_linear_data() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = RateFit::fit(&xs, &ys, vec![0.0; 4]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14 && (f.r2 - 1.0).abs() < 1e-14);
        assert!(matches!(RateFit::fit(&xs[..2], &ys[..2], vec![]), Err(ExperimentError::Fit { need: 3, got: 2 })));
    }

    #[test]
    fn recovers_exponential_tail() {
        let ts: Vec<f64> = (0..200).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 1.1 + 0.7 * (-0.3 * t).exp()).collect();
        let f = fit_exponential_tail(&ts, &ys).unwrap();
        assert!((f.asymptote - 1.1).abs() < 1e-6, "{f:?}");
        assert!((f.rate - 0.3).abs() < 1e-4, "{f:?}");
    }
}
