//! Numerical verification of curvature identities for homogeneous submersions
//! `G/K -> G/H` built from compact matrix Lie algebras.
//!
//! Every `G`-invariant tensor is evaluated at the base point `o`, so O'Neill
//! tensors are small matrices and holonomy fields along horizontal geodesics
//! `exp(tX) o` are matrix exponentials. Finite-difference oracles in
//! exponential coordinates ([`oracle`]) give an independent route to the
//! connection and curvature.

#![no_std]
// `!(x > tol)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod catalog;
pub mod connection;
pub mod error;
pub mod holonomy;
pub mod liealg;
pub mod linalg;
pub mod oneill;
pub mod oracle;
pub mod report;
pub mod sampling;

pub use connection::{AdaptedMetric, LinearMap, SubmersionTriple};
pub use error::{Error, Result};
pub use liealg::{build_algebra, AlgebraSpec, LieAlgebraBasis, Subspace};
pub use report::{CheckReport, Status};

/// Thresholds shared by every check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Structure-constant and subspace-membership tolerance.
    pub tol_struct: f64,
    /// Residual tolerance for identity checks.
    pub tol_check: f64,
    /// Below this `|A*_x xi|` counts as a kernel.
    pub kernel_eps: f64,
    /// Above this `sigma_min(A*_x)` counts as injective.
    pub fat_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol_struct: 1e-10, tol_check: 1e-9, kernel_eps: 1e-8, fat_eps: 1e-6 }
    }
}
