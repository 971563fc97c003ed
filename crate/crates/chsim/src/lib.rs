//! Pseudospectral simulator and verification toolkit for two-component
//! Camassa-Holm peakon systems on a periodic box.
//!
//! The crate evolves the momentum pair `(m, n)` for three integrable
//! systems (two two-component systems plus the cubic one-component
//! reduction), co-advects characteristic curves, monitors every conserved
//! quantity and blow-up indicator the theory provides, and evaluates
//! explicit blow-up-time predictors with certified constants.
//!
//! Layout:
//!
//! - [`grid`] / [`spectral`] / [`kernel`]: periodic grid, Fourier
//!   differentiation, Helmholtz inversion, de-aliased products, quadrature,
//!   and a direct kernel-convolution cross-check.
//! - [`dynamics`]: system definitions, velocity reconstruction, right-hand
//!   sides, initial-data families.
//! - [`integrator`]: adaptive RK4 with blow-up-aware termination.
//! - [`characteristics`]: characteristic curves, Jacobians, pull-back
//!   identities.
//! - [`diagnostics`]: conserved quantities, norms, indicators per sample.
//! - [`besov`]: dyadic frequency decomposition and Besov norms.
//! - [`blowup`]: certified constants, threshold roots, blow-up-time bounds,
//!   and the Riccati-inequality monitor.

pub mod besov;
pub mod blowup;
pub mod characteristics;
pub mod diagnostics;
pub mod dynamics;
pub mod grid;
pub mod integrator;
pub mod kernel;
pub mod par;
pub mod quad;
pub mod spectral;

pub use grid::{Field, Grid1D};

use thiserror::Error;

/// Errors surfaced by the solver library.
///
/// Programming errors (mismatched grids, out-of-range block indices) panic;
/// data-dependent failures return `ChError` so callers can report them.
#[derive(Debug, Error)]
pub enum ChError {
    #[error("non-finite value detected in {context}")]
    NonFinite { context: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("initial data rejected: {0}")]
    BadInitialData(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("observer failed at t={t}: {message}")]
    Observer { t: f64, message: String },
}

pub type Result<T> = std::result::Result<T, ChError>;
