//! Spectral-Galerkin simulation of a stochastic reaction-diffusion equation
//! with fading memory on a Dirichlet interval.
//!
//! The state is the pair `(u, eta)` of the field and its integrated past
//! history. Modules build outward: [`spectral`] holds the eigenbasis and
//! reaction terms, [`memory`] the kernels and history lift, [`dynamics`] the
//! integrators, [`coupling`] the distances between states, and
//! [`experiments`] the Monte-Carlo campaigns.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod memory;
pub mod quadrature;
pub mod spectral;

pub use error::{CouplingError, DynamicsError, ExperimentError, MemoryError, SpectralError};
