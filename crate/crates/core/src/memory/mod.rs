//! Memory kernels, the history lift and its exponential closure.

mod grid;
mod history;
mod kernel;
mod reduction;

pub use grid::{HistoryGrid, DEFAULT_NODES};
pub use history::{
    generator_norm, history_representation, init_history_from_past, kernel_average, max_transport_dt, memory_drift_grid,
    tail_functional, transport_dissipation, transport_step, transport_step_in_place, weighted_norm, weighted_norm_sq,
    DissipationCheck, DrivePath, HistoryField,
};
pub use kernel::{rescale_kernel, KernelCertificate, KernelFamily, KernelQuadrature, KernelSpec, KernelTable, FIRST_MOMENT_TOL};
pub use reduction::{exp_reduction_step, ExpMemoryState, ExpStepCoeffs};

use crate::error::MemoryError;
use crate::spectral::{DomainSpec, SpectralField};

/// Either representation of the history, for drift evaluation.
#[derive(Debug, Clone, Copy)]
pub enum MemoryView<'a> {
    Grid(&'a HistoryField, &'a HistoryGrid),
    Exp(&'a ExpMemoryState),
}

/// `g_k = alpha_k int mu_eps eta_k ds`; the caller subtracts `(1 - kappa) g`.
pub fn memory_drift(view: MemoryView<'_>, domain: &DomainSpec) -> Result<SpectralField, MemoryError> {
    match view {
        MemoryView::Grid(eta, grid) => memory_drift_grid(eta, grid, domain),
        MemoryView::Exp(state) => {
            if state.len() != domain.n_modes() {
                return Err(MemoryError::Dimension { expected: domain.n_modes(), got: state.len() });
            }
            Ok(state.drift(domain))
        }
    }
}
