//! Stability analysis of KKT points for nonlinear semidefinite programming.
//!
//! Given a problem with equality constraints and positive-semidefinite matrix
//! cone constraints, together with a candidate KKT pair, this crate computes
//! and cross-validates several equivalent stability characterizations:
//!
//! * constraint nondegeneracy (full row rank of the reduced constraint map),
//! * the strong second-order sufficient condition via the reduced matrix
//!   `M = WᵀQW` on the affine hull of the critical cone,
//! * coderivative-based criteria for the normal-cone map of the PSD cone,
//! * nonsingularity of generalized Jacobians of the nonsmooth KKT residual,
//! * an empirical perturbation probe of the canonically perturbed KKT map.
//!
//! The crate is organized bottom-up: [`symcone`] provides the spectral
//! kernel for symmetric matrices, [`coderiv`] the coderivative membership
//! certificates, [`model`] the problem and KKT-point representation,
//! [`reduction`] the nullspace reduction and the operator `M`, [`conditions`]
//! the individual condition checkers and the composite report, [`clarke`]
//! generalized Jacobians of the KKT residual, and [`solver`] a semismooth
//! Newton method plus the perturbation probe. [`oracle`] holds independent
//! reference implementations (a cyclic Jacobi eigensolver among them) used
//! only for cross-validation, never on the production path.

pub mod clarke;
pub mod coderiv;
pub mod conditions;
pub mod error;
pub mod model;
pub mod oracle;
pub mod reduction;
pub mod selftest;
pub mod solver;
pub mod symcone;

pub use error::{Error, Result};

pub use symcone::{SpectralDecomposition, SymMat};
