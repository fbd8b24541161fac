//! Numerical laboratory for complex Monge–Ampère equations on flat complex
//! tori with Hermitian metrics.
//!
//! The crate is organised bottom-up:
//!
//! * [`torus`]: grids, metric families and curvature constants;
//! * [`spectral`]: `dd^c`, Monge–Ampère densities, norms, moduli of
//!   continuity and log–log fits;
//! * [`solver`]: Newton solvers for `ω_u^n = e^u f ω^n` and
//!   `ω_u^n = c f ω^n`, plus the comparison-principle audits;
//! * [`regularization`]: the compactly supported smoothing kernel,
//!   Kiselman–Legendre transforms and the modulus propagation test;
//! * [`envelope`]: ω-psh envelopes by penalization and their Hölder
//!   regularity;
//! * [`experiment`]: config-driven sweeps, reports and the files the CLI
//!   writes.

pub mod envelope;
pub mod error;
pub mod experiment;
pub mod field;
pub mod herm;
pub mod linsolve;
pub mod regularization;
pub mod solver;
pub mod spectral;
mod stencil;
pub mod torus;

pub use error::{MageError, Result};
pub use field::ScalarField;
pub use herm::Herm;
pub use solver::{SolveResult, SolverConfig};
pub use torus::{
    curvature_constants, make_grid, make_metric, CurvatureConstants, GridSpec, MetricFamily,
    MetricField, TrigTerm,
};
