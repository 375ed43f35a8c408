//! Monte-Carlo campaigns: short-memory sweeps, contraction, moment audits,
//! mixing, invariant statistics and oracle cross-checks.
//!
//! Every campaign is deterministic given its configuration and master seed.
//! Trajectory `i` always reads noise stream `(seed, i)`, so systems at different
//! memory scales share their Brownian paths, and results are merged in task order.

mod config;
mod contraction;
mod ergodicity;
mod fit;
mod invariant;
mod moments;
mod oracles;
mod output;
mod sweep;

pub use config::{CampaignParams, ExperimentConfig, ExperimentKind};
pub use contraction::{run_contraction, ContractionReport, GirsanovPoint, PairRate};
pub use ergodicity::{run_ergodicity, ErgodicityReport, ErgodicityScale};
pub use fit::{fit_exponential_tail, ExpTailFit, RateFit};
pub use invariant::{run_invariant_limit, InvariantReport, ObservableGap};
pub use moments::{run_exponential_moments, run_moment_audit, ExpMomentReport, MomentAudit, MomentReport};
pub use oracles::{run_oracle_validation, OracleReport, TailCheck, TriangleLevel};
pub use output::{Audit, Outcome, Row, Summary};
pub use sweep::{run_short_memory_sweep, SweepReport};

use rayon::prelude::*;

use crate::coupling::MeanEstimate;
use crate::error::ExperimentError;

/// Ensemble statistics at one time point.
pub type EnsembleStats = MeanEstimate;

/// Stream index reserved for drawing random initial conditions, disjoint from trajectory streams.
pub(crate) const INIT_STREAM_BASE: u64 = 1 << 40;

/// Runs `f(0..n)` on up to `workers` threads and returns results in index order.
pub(crate) fn par_map<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>, ExperimentError>
where
    T: Send,
    F: Fn(usize) -> Result<T, ExperimentError> + Sync + Send,
{
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// Per-time-point statistics of `samples[trajectory][time]`.
pub(crate) fn column_stats(samples: &[Vec<f64>]) -> Result<Vec<MeanEstimate>, ExperimentError> {
    let len = samples.first().map_or(0, Vec::len);
    let mut col = vec![0.0; samples.len()];
    (0..len)
        .map(|j| {
            for (c, s) in col.iter_mut().zip(samples) {
                *c = s[j];
            }
            Ok(MeanEstimate::from_samples(&col)?)
        })
        .collect()
}
